//! Simulation core for a pairwise exchange gate between ultracold atoms in a
//! state-dependent double-well optical lattice.
//!
//! The crate covers the full experiment cycle: the spin-dependent superlattice
//! potential and its geometry ([`lattice`]), stationary spectra and the
//! interaction integrals built from them ([`spectral`]), time-dependent ramp
//! schedules ([`ramp`]) with calibrated defaults ([`presets`]), symmetrized
//! two-particle dynamics and level structure ([`twobody`]), experiment
//! programs with RF pulses and two execution engines ([`sequence`]),
//! ensemble occupancy, field noise, and synthetic detection ([`ensemble`]),
//! damped-oscillation fits and fidelity bookkeeping ([`analysis`]), and
//! shared numerics (grids, units, errors, optional data parallelism).
//!
//! Internal units throughout: energies in recoil energies E_R, lengths in
//! 1/k_R, times in hbar/E_R, with hbar = 1. [`units::Constants`] owns the
//! conversions.

pub mod analysis;
pub mod ensemble;
pub mod error;
pub mod grid;
pub mod lattice;
pub mod par;
pub mod presets;
pub mod ramp;
pub mod sequence;
pub mod spectral;
pub mod twobody;
pub mod units;
