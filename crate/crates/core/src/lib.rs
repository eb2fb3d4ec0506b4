//! Exact analysis of public-good congestion games and ride-sharing games:
//! equilibria, social optimum, price of anarchy, tax schemes, lower-bound
//! constructions, best-response dynamics and brute-force grid oracles.

pub mod adversary;
pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod families;
pub mod game;
pub mod oracle;
pub mod piecewise;
pub mod rational;
pub mod taxes;

pub use error::{Error, Result};
pub use game::{Action, EqInterval, EquilibriumSet, GameInstance, ModelKind, Technology};
pub use piecewise::{Affine, Direction, MonotoneFn, Piece, PiecewiseFn};
pub use rational::{Ext, Q};
