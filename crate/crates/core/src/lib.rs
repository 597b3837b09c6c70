//! Single-shot Bell analysis for joint unsharp measurements.
//!
//! Two qubits, A and B. Subsystem A jointly measures unsharp versions of
//! `X` and `Y`, subsystem B of `U` and `V`. The observed statistics
//! `p̃(ξ′|ρ)` over the 16 outcomes are inverted to a quasi-distribution
//! `p(ξ|ρ)` whose marginals reproduce every sharp correlation, and each
//! observed outcome `ξ′` is assigned a single-shot CHSH value `S(ξ′)` and
//! CH value `C(ξ|ξ′)`.
//!
//! Conventions: basis `|00⟩,|01⟩,|10⟩,|11⟩` with A the left tensor factor;
//! outcome index `8·[x=-1] + 4·[y=-1] + 2·[u=-1] + [v=-1]`.

#![forbid(unsafe_code)]

pub mod belltests;
pub mod error;
pub mod experiment;
pub mod inversion;
pub mod linalg;
pub mod measurement;
pub mod observables;
pub mod output;
pub mod sampler;
pub mod states;
pub mod validation;

pub use error::{Error, Result};
