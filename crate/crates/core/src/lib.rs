//! Simulation and verification of a cavity-mediated controlled-SWAP (Fredkin)
//! gate acting on photonic qubits.
//!
//! The crate is organised bottom-up:
//!
//! - [`cavity`]: frequency-domain reflection, transmission and noise
//!   coefficients of a two-sided single-atom cavity.
//! - [`quadrature`]: Gauss–Hermite and adaptive Simpson integration of
//!   smooth spectral integrands against a Gaussian weight.
//! - [`pulse`]: pulse-averaged overlaps, the loss probability `p`, the gate
//!   fidelity `F`, and parameter sweeps.
//! - [`statevector`], [`equivalence`], [`synthesis`]: exact pure-state
//!   simulation of the atom + photon register, global-phase-insensitive
//!   operator comparison, and exhaustive circuit search.
//! - [`channel`]: the circuit-level noisy CSWAP channel built from the
//!   pulse-averaged coefficients.
//!
//! All rates are dimensionless multiples of a reference decay rate
//! (conventionally `kappa_h`); every formula is homogeneous in the rate unit.

pub mod cavity;
pub mod channel;
pub mod equivalence;
pub mod error;
pub mod pulse;
pub mod quadrature;
pub mod statevector;
pub mod synthesis;

pub use cavity::{response, AtomBranch, CavityParams, Polarization, SpectralResponse};
pub use channel::{apply_noisy_cswap, build_model, NoisyGateModel, OutputDensity};
pub use equivalence::equivalent_up_to_phase;
pub use error::{Error, Result};
pub use pulse::{metrics, overlaps, sweep, GateMetrics, OverlapSet, PulseSpec, SweepRow};
pub use quadrature::{QuadratureConfig, QuadratureMethod};
pub use statevector::{BranchOutcome, Circuit, Gate, PureState, SingleQubitGate, Step};
pub use synthesis::{synthesize, SynthesisReport, SynthesisRequest, SynthesisTarget};

pub use num_complex::Complex64;
