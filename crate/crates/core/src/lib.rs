//! Resonance fluorescence of a laser-driven three-level atom whose driven
//! transition is shadowed by a weakly coupled shelving level.
//!
//! A monochromatic laser drives |1⟩ ↔ |3⟩; the metastable shelf |2⟩ couples
//! only through weak radiative decays (|3⟩ → |2⟩ at 2γ₃, |2⟩ → |1⟩ at 2γ₂).
//! Random shelving interrupts the fluorescence in telegraph fashion and adds
//! a very narrow peak at the laser frequency on top of the Mollow spectrum.
//! This crate computes that spectrum exactly from the Bloch-vector resolvent
//! and cross-validates the narrow peak against three independent
//! descriptions:
//!
//! * closed-form secular-limit amplitude/width/intensity ([`analytic`]),
//! * the random-telegraph picture with Monte Carlo quantum-jump trajectories
//!   and a periodogram width estimate ([`montecarlo`]),
//! * a dressed-state rate matrix and its mechanical spring analogue
//!   ([`springmodel`]).
//!
//! Units: all rates in γ (γ = 1 canonically), times in 1/γ, frequencies as
//! offsets ω − ω_L from the laser.

pub mod analytic;
pub mod cli;
pub mod liouvillian;
pub mod montecarlo;
pub mod numerics;
pub mod spectrum;
pub mod springmodel;
pub mod validation;

pub use liouvillian::{BlochVector, Liouvillian, SystemParams};
pub use spectrum::{GridSpec, PeakMethod, PeakMetrics, SpectrumCurve};
