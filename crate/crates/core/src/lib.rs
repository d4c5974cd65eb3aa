//! Simulation and exact game solving for online binary calibration.
//!
//! The crate covers the calibration ledger ([`calibration`]), the
//! Sign-Preservation game with an exact solver and constructive strategies
//! ([`sign_game`]), adversaries including the sidestepping scheme and its
//! early-stopping wrapper ([`adversaries`]), forecasters ([`forecasters`]), the
//! seeded game loop ([`engine`]) and the experiment pipeline ([`experiments`]).

pub mod adversaries;
pub mod calibration;
pub mod engine;
pub mod experiments;
mod fenwick;
pub mod forecasters;
pub mod sign_game;
