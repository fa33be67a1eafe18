//! Steady states of a degenerate parametric oscillator in which one phonon
//! of a mechanical pump mode converts into two microwave photons.
//!
//! Several independent routes to the same observables live side by side:
//! mean-field fixed points, a self-consistent linearization, the analytic
//! complex-P moment series, stochastic trajectory ensembles and a truncated
//! Fock-space master-equation solver.

pub mod error;
pub mod fpmoments;
pub mod lindblad;
pub mod params;
pub mod sde;
pub mod selfconsistent;
pub mod semiclassical;
pub mod specialfns;

pub use error::{Error, Result};
pub use params::{CircuitGeometry, PhysicalParams, ScaledParams};
