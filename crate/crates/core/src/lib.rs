//! Deterministic agent-based simulation engine with a virtual overlay
//! validation layer: declarative watches and invariants compiled from a
//! small constraint language, spatially or globally placed monitor agents,
//! structured trace logging, frame export, and offline trace re-checking.

pub mod engine;
pub mod models;
pub mod trace;
pub mod validators;
pub mod vomas;
