//! Quantum backflow in a Bragg-split Bose-Einstein condensate.
//!
//! A condensate released from a displaced harmonic trap expands with a known
//! scaling law; an instantaneous Bragg pulse then superposes a second momentum
//! component. Wherever the regime discriminant `eta` is positive, the current
//! is negative exactly when the density falls below a critical value, so the
//! effect can be read off a density snapshot.
//!
//! * [`physics`]: SI parameters and the oscillator unit system.
//! * [`wavepacket`]: analytic expanded packet and scaling parameter.
//! * [`interference`]: density, current, `eta` and critical density.
//! * [`design`]: backflow strength, optimal Bragg amplitude, guard checks.
//! * [`imaging`]: finite-resolution contrast and detectability.
//! * [`oracle`]: split-step propagator reproducing the whole protocol.
//!
//! The numerical modules are generic over [`Scalar`]; the aliases below fix
//! the common `f64` instantiations.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod imaging;
pub mod interference;
pub mod ode;
pub mod oracle;
pub mod physics;
pub mod scalar;
pub mod wavepacket;

pub use scalar::Scalar;

pub type BraggConfigF64 = interference::BraggConfig<f64>;
pub type FieldProfileF64 = interference::FieldProfile<f64>;
pub type WavepacketF64 = wavepacket::WavepacketState<f64>;
pub type InitialProfileF64 = wavepacket::InitialProfile<f64>;
pub type ScalingStateF64 = wavepacket::ScalingState<f64>;
pub type DesignInputF64 = design::DesignInput<f64>;
pub type DetectabilityReportF64 = imaging::DetectabilityReport<f64>;
pub type GridSpecF64 = oracle::GridSpec<f64>;
pub type PropagatorF64 = oracle::Propagator<f64>;
pub type SimStateF64 = oracle::SimState<f64>;

pub type BraggConfigF32 = interference::BraggConfig<f32>;
pub type WavepacketF32 = wavepacket::WavepacketState<f32>;
pub type PropagatorF32 = oracle::Propagator<f32>;
