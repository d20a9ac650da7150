//! Path-complete barrier functions for discrete-time switched systems.
//!
//! A switched system `x⁺ = f_σ(x)` is certified safe under arbitrary
//! switching by attaching one barrier function to each vertex of a
//! path-complete labeled graph. The crate covers the graph side
//! (path-completeness, simulation maps), the constructions showing which
//! graphs are necessary and which ones separate, conic synthesis of
//! quadratic and sum-of-squares certificates, and independent validation.

pub mod catalog;
pub mod conic;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod io;
pub mod necessity;
pub mod polynomial;
pub mod rational;
pub mod region;
pub mod safety;
pub mod separation;
pub mod synthesis;
pub mod system;

pub use conic::{ClarabelBackend, ConicBackend};
pub use error::{Error, Result};
pub use graph::{compare, find_simulation, is_path_complete, Comparison, LabeledGraph, PathCompleteness, SimulationMap};
pub use region::{Region, SafetySpec};
pub use synthesis::{Certificate, SynthOutcome, ValidationReport};
pub use system::{Alphabet, SwitchedSystem, Word};
