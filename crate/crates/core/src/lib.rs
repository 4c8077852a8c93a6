//! Quasistatic planar brittle-fracture simulation by vanishing viscosity.
//!
//! The crate evolves cracks in a 2D linearly elastic body under slow loading.
//! Cracks live in a class of curvature-bounded simple curves; at each time
//! step the new configuration minimizes elastic plus surface energy with a
//! viscous rate penalty. The energy release rate at each crack tip is
//! evaluated with a domain-integral derivative formula, and the resulting
//! evolutions are checked against Griffith-type activation conditions,
//! driven to the zero-viscosity limit, and reparametrized by total arc
//! length so that brutal propagations become resolvable transitions.
//!
//! Module map:
//! - [`geom`]: small 2D primitives (segments, polygons, distances)
//! - [`crack`]: admissible crack sets, Hausdorff distance, tip extensions
//! - [`expr`]: tiny arithmetic expression grammar for spatial fields
//! - [`material`]: Lamé/toughness fields and time-sampled loading
//! - [`mesh`]: crack-conforming triangulations with duplicated face nodes
//! - [`fem`]: linear elasticity solves and energy evaluation
//! - [`errate`]: energy release rate via the velocity-field domain integral
//! - [`evolution`]: viscosity-penalized incremental minimization
//! - [`viscosity`]: vanishing-viscosity families and parametrized traces
//! - [`config`]: scenario configuration, orchestration, persistence

pub mod config;
pub mod crack;
pub mod domain;
pub mod errate;
pub mod evolution;
pub mod expr;
pub mod fem;
pub mod geom;
pub mod material;
pub mod mesh;
pub mod viscosity;

use thiserror::Error;

/// Unified error type for all pipeline stages.
#[derive(Debug, Error)]
pub enum Error {
    /// Zero-length segments, repeated vertices and similar representation
    /// defects. Distinct from an admissibility *failure*, which is a valid
    /// negative answer.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("unknown tip index {0}")]
    UnknownTip(usize),

    #[error("meshing failed: {0}")]
    Meshing(String),

    #[error("insufficient Dirichlet data: the reduced system is singular")]
    InsufficientDirichlet,

    #[error("linear solve failed: {0}")]
    Solve(String),

    #[error("mismatched mesh/crack: {0}")]
    Mismatch(String),

    /// A velocity field cannot be built because no admissible cutoff radius
    /// exists; results at such a configuration are not meaningful.
    #[error("tip too close to boundary/other crack: {0}")]
    TipTooClose(String),

    #[error("configuration invalid:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("inadmissible crack: {0}")]
    Inadmissible(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
