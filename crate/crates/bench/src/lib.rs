//! Fixtures shared by the benchmarks.

use fredkin_core::{CavityParams, Complex64, PureState};

/// The atomic-cavity operating point in units of kappa.
pub fn atomic_params() -> CavityParams {
    CavityParams::symmetric(32.0 / 4.2, 1.0, 2.6 / 4.2).expect("valid rates")
}

/// A dense, deterministic `n`-qubit state with no zero amplitudes.
pub fn dense_state(n: usize, phase: f64) -> PureState {
    let amps = (0..1usize << n)
        .map(|k| Complex64::from_polar(1.0 + k as f64 * 0.1, phase * k as f64))
        .collect();
    PureState::normalized(amps).expect("non-zero amplitudes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_valid() {
        assert!(atomic_params().validate().is_ok());
        let s = dense_state(4, 0.3);
        assert!((s.norm() - 1.0).abs() < 1e-12);
        assert_eq!(s.num_wires(), 4);
    }
}
