//! Simulation and analysis of quantum steering in a qubit collision model.
//!
//! The library covers the full pipeline without quantum hardware:
//!
//! - [`collision`] builds the dephasing collision dynamics (unitary `W`,
//!   joint system-environment states, the Bloch-channel matrix).
//! - [`assemblage`] turns measurement strategies on the ancillas into
//!   assemblages of subnormalized steered states.
//! - [`counts`] emulates finite-shot experiments with a configurable noise
//!   model and handles count-file I/O.
//! - [`tomography`] reconstructs assemblages by linear inversion under an
//!   arbitrary dichotomic POVM triple.
//! - [`steering`] quantifies steering via the steering-weight semidefinite
//!   program with a dual certificate.
//! - [`search`] runs the outer optimization loops: the valid-POVM lower
//!   bound and the third-measurement-strategy search.
//! - [`cli`] wires the stages together behind file-based handoffs.

pub mod assemblage;
pub mod cli;
pub mod collision;
pub mod counts;
pub mod error;
pub mod policy;
pub mod qmath;
pub mod search;
pub mod steering;
pub mod tomography;

pub use error::Error;
pub use policy::NumericPolicy;
