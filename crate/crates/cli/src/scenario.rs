//! Scenario files: a TOML description of one game plus optional dynamics and
//! analysis settings.
//!
//! ```toml
//! name = "bistable"
//!
//! [technology]
//! preset = "bus"            # bus | carpool-K | tolled-carpool-K | train
//! # or: kind = "shared", kappa = "1/4", tau = "0"
//!
//! [externality]
//! l0 = "0"
//! l_prime = [
//!   { end = "0.12", value = "1", closed = true },
//!   { end = "1", value = "0.5" },
//! ]
//!
//! [alpha]
//! pieces = [
//!   { end = "0.06", value = "1.2", closed = true },
//!   { end = "1", value = "0.8" },
//! ]
//!
//! [tax]
//! scheme = "pigouvian"      # constant-sqrt | gamma-envelope | zero | constant | custom
//!
//! [dynamics]
//! n = 1000
//! x0 = "0.5"
//! seed = 1
//! ```
//!
//! Numbers may be TOML integers, floats or strings; strings accept `"1/3"`,
//! `"0.125"` and `"2.5e-4"` and are parsed exactly. A piece is either constant
//! (`value`) or linear (`slope` and `intercept`); `at` instead of `end` fixes the
//! value at a single point.

use std::fmt;
use std::path::Path;

use pgcg_core::dynamics::{DEFAULT_AGENTS, DEFAULT_MAX_STEPS};
use pgcg_core::piecewise::{Affine, Piece};
use pgcg_core::rational::{format_rational, parse_rational};
use pgcg_core::taxes::TaxScheme;
use pgcg_core::{GameInstance, ModelKind, MonotoneFn, PiecewiseFn, Technology, Q};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A number as written in a scenario file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Num {
    pub fn exact(q: &Q) -> Self {
        Num::Text(format_rational(q))
    }

    fn parse(&self, path: &str) -> Result<Q, CliError> {
        let text = match self {
            Num::Int(i) => i.to_string(),
            // shortest round-trip form, so 0.12 means 12/100
            Num::Float(f) if f.is_finite() => format!("{f:?}"),
            Num::Float(f) => return Err(CliError::input(path, format!("{f} is not a finite number"))),
            Num::Text(s) => s.clone(),
        };
        parse_rational(&text).map_err(|e| CliError::input(path, e.to_string()))
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num::Int(i) => write!(f, "{i}"),
            Num::Float(x) => write!(f, "{x}"),
            Num::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intercept: Option<Num>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub closed: bool,
}

impl PieceSpec {
    fn to_piece(&self, path: &str) -> Result<Piece, CliError> {
        let formula = match (&self.value, &self.slope, &self.intercept) {
            (Some(v), None, None) => Affine::constant(v.parse(&format!("{path}.value"))?),
            (None, Some(s), Some(i)) => {
                Affine::new(s.parse(&format!("{path}.slope"))?, i.parse(&format!("{path}.intercept"))?)
            }
            (None, None, None) => return Err(CliError::input(path, "needs `value` or `slope` + `intercept`")),
            _ => return Err(CliError::input(path, "give either `value` or `slope` + `intercept`, not a mix")),
        };
        match (&self.end, &self.at) {
            (Some(e), None) => {
                let end = e.parse(&format!("{path}.end"))?;
                Ok(Piece { end, formula, include_end: self.closed })
            }
            (None, Some(a)) => {
                if self.closed {
                    return Err(CliError::input(path, "`closed` has no meaning on a point piece"));
                }
                Ok(Piece { end: a.parse(&format!("{path}.at"))?, formula, include_end: true })
            }
            _ => Err(CliError::input(path, "needs exactly one of `end` or `at`")),
        }
    }

    fn from_piece(p: &Piece, previous_end: &Option<Q>) -> Self {
        let mut spec = PieceSpec::default();
        if p.formula.is_constant() {
            spec.value = Some(Num::exact(&p.formula.intercept));
        } else {
            spec.slope = Some(Num::exact(&p.formula.slope));
            spec.intercept = Some(Num::exact(&p.formula.intercept));
        }
        if previous_end.as_ref() == Some(&p.end) {
            spec.at = Some(Num::exact(&p.end));
        } else {
            spec.end = Some(Num::exact(&p.end));
            spec.closed = p.include_end;
        }
        spec
    }
}

/// Parses a piece list into a function, prefixing errors with `path`.
pub fn build_fn(pieces: &[PieceSpec], path: &str) -> Result<PiecewiseFn, CliError> {
    if pieces.is_empty() {
        return Err(CliError::input(path, "empty piece list"));
    }
    let parsed =
        pieces.iter().enumerate().map(|(i, p)| p.to_piece(&format!("{path}[{i}]"))).collect::<Result<Vec<_>, _>>()?;
    PiecewiseFn::from_pieces(parsed).map_err(|e| CliError::input(path, e.to_string()))
}

/// Rejects a piece list whose values rise anywhere, naming the pieces involved.
fn check_non_increasing(pieces: &[PieceSpec], path: &str) -> Result<(), CliError> {
    let mut start = Q::from(0);
    let mut last: Option<(usize, Q)> = None;
    for (i, spec) in pieces.iter().enumerate() {
        let p = spec.to_piece(&format!("{path}[{i}]"))?;
        let (a, b) = (p.formula.at(&start), p.formula.at(&p.end));
        if let Some((j, prev)) = &last {
            if a > *prev {
                return Err(CliError::input(
                    path,
                    format!(
                        "α must be non-increasing: piece {j} ends at {} but piece {i} starts at {}",
                        format_rational(prev),
                        format_rational(&a)
                    ),
                ));
            }
        }
        if b > a {
            return Err(CliError::input(&format!("{path}[{i}]"), "α must be non-increasing but this piece rises"));
        }
        last = Some((i, b));
        start = p.end;
    }
    Ok(())
}

/// Writes a function back out as a piece list.
pub fn fn_specs(f: &PiecewiseFn) -> Vec<PieceSpec> {
    let mut out = Vec::new();
    let mut previous: Option<Q> = None;
    for p in f.to_pieces() {
        out.push(PieceSpec::from_piece(&p, &previous));
        previous = Some(p.end);
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TechnologySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<Num>,
}

/// Expands `bus`, `train`, `carpool-K` and `tolled-carpool-K`.
pub fn preset(name: &str) -> Result<Technology, CliError> {
    let path = "technology.preset";
    let k = |rest: &str| -> Result<u32, CliError> {
        rest.parse::<u32>().map_err(|_| CliError::input(path, format!("bad group size in {name:?}")))
    };
    let tech = match name {
        "bus" => Ok(Technology::bus()),
        "train" => Ok(Technology::train()),
        _ => {
            if let Some(rest) = name.strip_prefix("tolled-carpool-") {
                Technology::tolled_carpool(k(rest)?)
            } else if let Some(rest) = name.strip_prefix("carpool-") {
                Technology::carpool(k(rest)?)
            } else {
                return Err(CliError::input(
                    path,
                    format!("unknown preset {name:?} (expected bus, train, carpool-K, tolled-carpool-K)"),
                ));
            }
        }
    };
    tech.map_err(|e| CliError::input(path, e.to_string()))
}

impl TechnologySpec {
    pub fn build(&self) -> Result<Technology, CliError> {
        if let Some(name) = &self.preset {
            if self.kind.is_some() || self.kappa.is_some() || self.tau.is_some() {
                return Err(CliError::input("technology", "`preset` excludes `kind`, `kappa` and `tau`"));
            }
            return preset(name);
        }
        match self.kind.as_deref().unwrap_or("shared") {
            "train" => {
                if self.kappa.is_some() || self.tau.is_some() {
                    return Err(CliError::input("technology", "the train model takes no κ or τ"));
                }
                Ok(Technology::train())
            }
            "shared" => {
                let kappa = match &self.kappa {
                    Some(k) => k.parse("technology.kappa")?,
                    None => Q::from(0),
                };
                let tau = match &self.tau {
                    Some(t) => t.parse("technology.tau")?,
                    None => Q::from(0),
                };
                Technology::shared(kappa, tau).map_err(|e| CliError::input("technology", e.to_string()))
            }
            other => Err(CliError::input("technology.kind", format!("unknown kind {other:?} (shared or train)"))),
        }
    }

    pub fn from_technology(t: &Technology) -> Self {
        match t.kind() {
            ModelKind::Train => TechnologySpec { kind: Some("train".into()), ..Default::default() },
            ModelKind::SharedExternality => TechnologySpec {
                kind: Some("shared".into()),
                kappa: Some(Num::exact(t.kappa())),
                tau: Some(Num::exact(t.tau())),
                preset: None,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalitySpec {
    #[serde(default = "zero_num")]
    pub l0: Num,
    pub l_prime: Vec<PieceSpec>,
}

fn zero_num() -> Num {
    Num::Int(0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaSpec {
    pub pieces: Vec<PieceSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaxSpec {
    pub scheme: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pieces: Option<Vec<PieceSpec>>,
}

impl Default for TaxSpec {
    fn default() -> Self {
        TaxSpec { scheme: "zero".into(), value: None, pieces: None }
    }
}

impl TaxSpec {
    pub fn scheme(&self) -> Result<TaxScheme, CliError> {
        match self.scheme.as_str() {
            "constant" => {
                let v = self.value.as_ref().ok_or_else(|| CliError::input("tax.value", "required for `constant`"))?;
                Ok(TaxScheme::Constant(v.parse("tax.value")?))
            }
            "custom" => {
                let p = self.pieces.as_ref().ok_or_else(|| CliError::input("tax.pieces", "required for `custom`"))?;
                Ok(TaxScheme::Custom(build_fn(p, "tax.pieces")?))
            }
            name => {
                if self.value.is_some() || self.pieces.is_some() {
                    return Err(CliError::input("tax", format!("scheme {name:?} takes no `value` or `pieces`")));
                }
                TaxScheme::from_name(name).map_err(|e| CliError::input("tax.scheme", e.to_string()))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSpec {
    #[serde(default = "default_agents")]
    pub n: usize,
    #[serde(default = "zero_num")]
    pub x0: Num,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
}

fn default_agents() -> usize {
    DEFAULT_AGENTS
}

fn default_max_steps() -> u64 {
    DEFAULT_MAX_STEPS
}

impl Default for DynamicsSpec {
    fn default() -> Self {
        DynamicsSpec { n: DEFAULT_AGENTS, x0: zero_num(), seed: 0, max_steps: DEFAULT_MAX_STEPS }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub include_knife_edges: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<Num>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub technology: TechnologySpec,
    pub externality: ExternalitySpec,
    pub alpha: AlphaSpec,
    #[serde(default)]
    pub tax: TaxSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsSpec>,
    #[serde(default)]
    pub analysis: AnalysisSpec,
}

/// The validated parts of a scenario.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub scenario: Scenario,
    pub game: GameInstance,
    pub scheme: TaxScheme,
}

impl Scenario {
    /// Builds and validates the game, using `tax` in place of the file's scheme if given.
    pub fn game_with(&self, tax: Option<&TaxScheme>) -> Result<(GameInstance, TaxScheme), CliError> {
        let tech = self.technology.build()?;
        let l_prime = build_fn(&self.externality.l_prime, "externality.l_prime")?;
        let l0 = self.externality.l0.parse("externality.l0")?;
        let alpha_fn = build_fn(&self.alpha.pieces, "alpha.pieces")?;
        check_non_increasing(&self.alpha.pieces, "alpha.pieces")?;
        let alpha = MonotoneFn::non_increasing(alpha_fn).map_err(|e| CliError::input("alpha.pieces", e.to_string()))?;
        let scheme = match tax {
            Some(s) => s.clone(),
            None => self.tax.scheme()?,
        };
        let t = scheme.resolve(&l_prime, &tech).map_err(|e| CliError::input("tax", e.to_string()))?;
        let game = if t.is_nonnegative() {
            GameInstance::new(l_prime, l0, alpha, t, tech)
        } else {
            GameInstance::new_with_subsidy(l_prime, l0, alpha, t, tech)
        }
        .map_err(|e| CliError::input("scenario", e.to_string()))?;
        Ok((game, scheme))
    }

    pub fn game(&self) -> Result<GameInstance, CliError> {
        Ok(self.game_with(None)?.0)
    }

    /// A scenario describing `g` exactly; the tax is written out as `custom`
    /// unless `scheme` names it.
    pub fn from_game(name: &str, g: &GameInstance, scheme: Option<&TaxScheme>) -> Self {
        let tax = match scheme {
            None | Some(TaxScheme::Custom(_)) => {
                TaxSpec { scheme: "custom".into(), value: None, pieces: Some(fn_specs(g.tax())) }
            }
            Some(TaxScheme::Constant(c)) => {
                TaxSpec { scheme: "constant".into(), value: Some(Num::exact(c)), pieces: None }
            }
            Some(s) => TaxSpec { scheme: s.name().into(), value: None, pieces: None },
        };
        Scenario {
            name: name.into(),
            description: String::new(),
            technology: TechnologySpec::from_technology(g.tech()),
            externality: ExternalitySpec { l0: Num::exact(g.l0()), l_prime: fn_specs(g.l_prime()) },
            alpha: AlphaSpec { pieces: fn_specs(g.alpha().inner()) },
            tax,
            dynamics: None,
            analysis: AnalysisSpec::default(),
        }
    }

    pub fn resolution(&self) -> Result<Option<Q>, CliError> {
        self.analysis.resolution.as_ref().map(|r| r.parse("analysis.resolution")).transpose()
    }

    pub fn dynamics_x0(&self) -> Result<Q, CliError> {
        self.dynamics.clone().unwrap_or_default().x0.parse("dynamics.x0")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario types always serialise")
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Loaded, CliError> {
    let scenario: Scenario = toml::from_str(text).map_err(|e| CliError::input("scenario", e.to_string()))?;
    let (game, scheme) = scenario.game_with(None)?;
    scenario.resolution()?;
    scenario.dynamics_x0()?;
    Ok(Loaded { scenario, game, scheme })
}

pub fn load_scenario(path: &Path) -> Result<Loaded, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(&path.display().to_string(), format!("cannot read: {e}")))?;
    parse_scenario(&text)
}
