//! Finite-time Oseledets data: exponents, splitting, Lyapunov frames, Pesin radii, local maps.

pub mod local;
pub mod lyapunov;
pub mod radius;

pub use local::{ChartDynamics, LocalDynamics, LocalMap, QuadraticDynamics};
pub use lyapunov::{finite_lyapunov, invariance_residual, lyapunov_basis, oseledets_splitting, LyapunovBasis, LyapunovSpectrum, Splitting};
pub use radius::{pesin_radius, raw_alpha, tempered_envelope, ChartedWindow, PesinConstants};

use crate::error::{Error, Result};
use crate::orbit::OrbitWindow;
use crate::system::System;

/// Birkhoff average and minimum of log d(x_i, I) along the window.
pub fn check_integrability(system: &System, w: &OrbitWindow) -> Result<(f64, f64)> {
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    for i in w.first_index()..=w.last_index() {
        let d = system.dist_indeterminacy(w.at(i));
        if d <= 0.0 {
            return Err(Error::Indeterminacy(i));
        }
        let l = d.ln();
        sum += l;
        min = min.min(l);
    }
    Ok((sum / w.len() as f64, min))
}
