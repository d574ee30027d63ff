//! Split-step Fourier propagator for the 1D Schrödinger / Gross-Pitaevskii
//! equation in oscillator units, used as an independent check of the
//! analytic model.
//!
//! The whole protocol is simulated on one periodic grid: ground state in the
//! trap, sudden trap displacement, dipole oscillation, release, free
//! expansion and an instantaneous Bragg kick.

mod checkpoint;
mod grid;
mod propagator;
mod protocol;

use thiserror::Error;

pub use checkpoint::{
    read_checkpoint, write_checkpoint, write_snapshot_csv, Checkpoint, SnapshotUnits,
    CHECKPOINT_MAGIC,
};
pub use grid::{GridSpec, Potential};
pub use propagator::{bragg_kick, ImagTimeOptions, Propagator, SimState};
pub use protocol::{
    compare_with_analytic, continuity_residual, negative_flux_fraction, run_protocol,
    AnalyticComparison, ContinuityCheck, ProtocolResult, ProtocolSpec,
};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("grid needs a power-of-two point count >= 16 (got {0})")]
    BadPointCount(usize),
    #[error("grid span must be positive (got {0})")]
    BadSpan(f64),
    #[error("time step {dt} exceeds the stability bound {limit} (1/omega_x units)")]
    TimeStepTooLarge { dt: f64, limit: f64 },
    #[error("time step must be positive (got {0})")]
    NonPositiveTimeStep(f64),
    #[error("density at the grid boundary reached {ratio:.3e} of the peak; enlarge x_span")]
    BoundaryDensity { ratio: f64 },
    #[error("imaginary-time relaxation did not converge in {steps} steps (energy change {energy_change:.3e}, state change {state_change:.3e})")]
    NotConverged {
        steps: usize,
        energy_change: f64,
        state_change: f64,
    },
    #[error("ground state requires a confining potential")]
    Unconfined,
    #[error("state length {got} does not match grid size {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("non-finite values in the wavefunction")]
    NonFinite,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
