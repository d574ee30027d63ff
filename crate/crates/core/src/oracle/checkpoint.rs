//! Snapshot CSV and binary checkpoint files.
//!
//! Checkpoint layout, all little-endian:
//!
//! ```text
//! offset  size  field
//! 0       8     magic "BFCKPT01"
//! 8       8     n_points (u64)
//! 16      8     x_min (f64)
//! 24      8     x_span (f64)
//! 32      8     dt (f64)
//! 40      8     time (f64)
//! 48      8     g (f64)
//! 56      16n   samples: re (f64), im (f64) per grid point
//! ```

use std::io::{Read, Write};

use num_complex::Complex;

use crate::scalar::Scalar;

use super::grid::GridSpec;
use super::propagator::{Propagator, SimState};
use super::OracleError;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"BFCKPT01";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T> {
    pub grid: GridSpec<T>,
    pub state: SimState<T>,
}

pub fn write_checkpoint<T: Scalar, W: Write>(
    mut w: W,
    grid: &GridSpec<T>,
    state: &SimState<T>,
) -> Result<(), OracleError> {
    if state.psi.len() != grid.n_points {
        return Err(OracleError::SizeMismatch {
            expected: grid.n_points,
            got: state.psi.len(),
        });
    }
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&(grid.n_points as u64).to_le_bytes())?;
    for v in [grid.x_min, grid.x_span, grid.dt, state.time, state.g] {
        w.write_all(&v.to_f64_lossy().to_le_bytes())?;
    }
    for c in &state.psi {
        w.write_all(&c.re.to_f64_lossy().to_le_bytes())?;
        w.write_all(&c.im.to_f64_lossy().to_le_bytes())?;
    }
    Ok(())
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64, OracleError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_checkpoint<T: Scalar, R: Read>(mut r: R) -> Result<Checkpoint<T>, OracleError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(OracleError::Checkpoint("bad magic".into()));
    }
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    let n = usize::try_from(u64::from_le_bytes(b))
        .map_err(|_| OracleError::Checkpoint("point count overflows usize".into()))?;
    let x_min = read_f64(&mut r)?;
    let x_span = read_f64(&mut r)?;
    let dt = read_f64(&mut r)?;
    let time = read_f64(&mut r)?;
    let g = read_f64(&mut r)?;
    let grid = GridSpec::new(n, T::lit(x_min), T::lit(x_span), T::lit(dt))?;
    let mut psi = Vec::with_capacity(n);
    for _ in 0..n {
        let re = read_f64(&mut r)?;
        let im = read_f64(&mut r)?;
        psi.push(Complex::new(T::lit(re), T::lit(im)));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(OracleError::Checkpoint(
            "trailing bytes after samples".into(),
        ));
    }
    Ok(Checkpoint {
        grid,
        state: SimState {
            psi,
            time: T::lit(time),
            g: T::lit(g),
        },
    })
}

/// Conversion factors applied when writing snapshots (all 1 keeps
/// oscillator units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotUnits {
    pub length: f64,
    /// Multiplies `psi`; `1/sqrt(a_x)` for SI.
    pub amplitude: f64,
    pub density: f64,
    pub current: f64,
}

impl Default for SnapshotUnits {
    fn default() -> Self {
        Self {
            length: 1.0,
            amplitude: 1.0,
            density: 1.0,
            current: 1.0,
        }
    }
}

/// Writes `x,re_psi,im_psi,rho,J` rows with 17 significant digits.
pub fn write_snapshot_csv<T: Scalar, W: Write>(
    mut w: W,
    propagator: &mut Propagator<T>,
    state: &SimState<T>,
    units: SnapshotUnits,
) -> Result<(), OracleError> {
    let current = propagator.measure_current(state);
    writeln!(w, "x,re_psi,im_psi,rho,J")?;
    for (i, &x) in propagator.positions().iter().enumerate() {
        let c = state.psi[i];
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            x.to_f64_lossy() * units.length,
            c.re.to_f64_lossy() * units.amplitude,
            c.im.to_f64_lossy() * units.amplitude,
            c.norm_sqr().to_f64_lossy() * units.density,
            current[i].to_f64_lossy() * units.current
        )?;
    }
    Ok(())
}
