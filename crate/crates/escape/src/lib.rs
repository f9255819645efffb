//! Escape thresholds for a harmonically forced particle in a quartic
//! potential well.
//!
//! The library computes the critical forcing amplitude `F_crit(Omega)` below
//! which a particle starting at rest at the bottom of the well stays trapped,
//! and above which it crosses the barrier. Near the 1:1 resonance this curve
//! is dip-shaped, and both of its branches follow from the action-angle
//! description of the unforced well:
//!
//! * [`potentials`] defines the wells (symmetric/asymmetric quartic, and an
//!   electrostatically loaded beam reduced to quartic form),
//! * [`elliptic`] supplies the Legendre/Carlson integrals and Jacobi
//!   functions the closed forms are built from,
//! * [`action_angle`] evaluates action, frequency, and the resonant Fourier
//!   coefficient of the orbit, in closed form and by direct quadrature,
//! * [`resonance`] assembles the escape curve from the slow flow at
//!   resonance: the saddle branch, the barrier-crossing branch, and their
//!   combination,
//! * [`simulator`] is the independent check: brute-force integration of the
//!   driven equation of motion with first-hitting escape detection,
//! * [`fitting`] reduces the electrostatic beam potential to the quartic
//!   normal form by several fitting schemes.
//!
//! Everything is deterministic: no global state, no hidden RNG.

pub mod action_angle;
pub mod cli;
pub mod elliptic;
pub mod error;
pub mod fitting;
pub mod potentials;
pub mod resonance;
pub mod simulator;
pub(crate) mod util;

pub use error::{Error, Result};
