//! Deterministic, seed-reproducible simulator of the one-type and
//! two-type lazy frog model on the integer lattice, together with a
//! coupling laboratory that checks the pathwise inclusions between
//! coupled processes at runtime and a measurement suite for shape and
//! coexistence experiments.
//!
//! Everything random is a pure function of a seed and a structured key
//! (see [`randomfield`]), so identical scenarios reproduce identical
//! runs bit for bit, and two processes can share randomness on an exact
//! subset of keys.

#![forbid(unsafe_code)]

pub mod couplings;
pub mod engine;
pub mod lattice;
pub mod measure;
pub mod randomfield;
pub mod render;
pub mod scenario;

pub use engine::{run, EngineState, RunConfig, Snapshot, Trajectory};
pub use lattice::{Site, SiteSet};
pub use randomfield::{ParticleId, RandomField, StreamTag};
pub use scenario::{parse_scenario, Mode, ParticleType, Scenario, TieRule};
