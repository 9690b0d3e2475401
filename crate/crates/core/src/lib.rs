//! Numerical toolkit for mapping-class dynamics on the SU(2) character variety
//! of the once-punctured torus and for asymptotic expansions of the associated
//! oscillatory and Laplace integrals.
//!
//! The crate is organized in four subsystems:
//!
//! * [`charvar`] — trace-coordinate model of the relative moduli spaces
//!   `M_l = {L(x,y,z) = l}`, Dehn-twist word actions with exact Jacobians,
//!   grid-seeded fixed-point solving and transversality classification.
//! * [`phase`] — the linear algebra of the phase function at a fixed point:
//!   (H, K) block decomposition of a real symplectic map, the block formula
//!   for `Hess(P)`, radicals of complex symmetric bilinear forms.
//! * [`models`] — concrete phase models with exact oracles: the CP¹ rotation
//!   quantization and a registry of golden degenerate phases.
//! * [`oscint`] — adaptive quadrature over k-grids, stationary-phase leading
//!   terms, parameter reduction, and asymptotic-series fitting with log(k)
//!   detection.
//!
//! [`report`] provides the deterministic JSON/CSV emitters shared by the
//! command-line front end.

pub mod charvar;
pub mod models;
pub mod oracles;
pub mod oscint;
pub mod phase;
pub mod report;

/// Version string embedded in cache keys and reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
