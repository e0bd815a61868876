//! Operator comparison up to a global phase.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// True when `max_ij |U_ij - e^{i phi} V_ij| <= tol`, with `phi` taken from the
/// entry pair where `|U_ij| |V_ij|` is largest.
pub fn equivalent_up_to_phase(u: &DMatrix<Complex64>, v: &DMatrix<Complex64>, tol: f64) -> Result<bool> {
    if u.shape() != v.shape() {
        return Err(Error::domain(format!(
            "dimension mismatch: {:?} vs {:?}",
            u.shape(),
            v.shape()
        )));
    }
    if !(tol >= 0.0) {
        return Err(Error::domain(format!("tolerance must be non-negative, got {tol}")));
    }
    Ok(equivalent_slices(u.as_slice(), v.as_slice(), tol))
}

/// Slice form of [`equivalent_up_to_phase`]; both slices in the same layout.
pub(crate) fn equivalent_slices(u: &[Complex64], v: &[Complex64], tol: f64) -> bool {
    let pivot = u
        .iter()
        .zip(v)
        .enumerate()
        .map(|(k, (a, b))| (k, a.norm() * b.norm()))
        .fold(None, |best: Option<(usize, f64)>, (k, w)| match best {
            Some((_, bw)) if bw >= w => best,
            _ => Some((k, w)),
        });
    let phase = match pivot {
        Some((k, w)) if w > 0.0 => {
            let ratio = u[k] / v[k];
            ratio / ratio.norm()
        }
        // one side vanishes everywhere the other is non-zero
        _ => Complex64::new(1.0, 0.0),
    };
    u.iter().zip(v).all(|(a, b)| (a - phase * b).norm() <= tol)
}
