//! Linearized input–output response of a two-sided cavity containing a single
//! three-level atom.
//!
//! Each polarization mode `mu` couples the atomic ground state `|0>` to an
//! excited state `|e_mu>` with rate `g_mu`; both mirrors leak at the same rate
//! `kappa_mu`, and `|e_mu>` decays into free space at `gamma_mu`. With the atom
//! parked in `|1>` the cavity is empty.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::H, Polarization::V];
}

/// Which atomic ground state the pulse sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AtomBranch {
    /// Atom in `|0>`: interacts with both cavity modes (projector `P0 = 1`).
    Coupled,
    /// Atom in `|1>`: transparent to the cavity (`P0 = 0`).
    Decoupled,
}

impl AtomBranch {
    fn projector(self) -> f64 {
        match self {
            AtomBranch::Coupled => 1.0,
            AtomBranch::Decoupled => 0.0,
        }
    }
}

/// Rates of one polarization mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeRates {
    pub g: f64,
    pub kappa: f64,
    pub gamma: f64,
}

impl ModeRates {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("g", self.g), ("kappa", self.kappa), ("gamma", self.gamma)] {
            if !v.is_finite() {
                return Err(Error::domain(format!("{name} must be finite, got {v}")));
            }
            if v < 0.0 {
                return Err(Error::domain(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.kappa <= 0.0 {
            return Err(Error::domain(format!(
                "kappa must be strictly positive, got {}",
                self.kappa
            )));
        }
        Ok(())
    }
}

/// Physical rates for both polarization modes, in a common angular-frequency
/// unit. Symmetric mirrors are assumed: `kappa` is the decay rate through
/// each of the two mirrors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    pub g_h: f64,
    pub g_v: f64,
    pub kappa_h: f64,
    pub kappa_v: f64,
    pub gamma_h: f64,
    pub gamma_v: f64,
}

impl CavityParams {
    /// Same `(g, kappa, gamma)` for both polarizations.
    pub fn symmetric(g: f64, kappa: f64, gamma: f64) -> Result<Self> {
        Self::new(ModeRates { g, kappa, gamma }, ModeRates { g, kappa, gamma })
    }

    pub fn new(h: ModeRates, v: ModeRates) -> Result<Self> {
        let params = CavityParams {
            g_h: h.g,
            g_v: v.g,
            kappa_h: h.kappa,
            kappa_v: v.kappa,
            gamma_h: h.gamma,
            gamma_v: v.gamma,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        self.mode(Polarization::H).validate()?;
        self.mode(Polarization::V).validate()
    }

    pub fn mode(&self, pol: Polarization) -> ModeRates {
        match pol {
            Polarization::H => ModeRates { g: self.g_h, kappa: self.kappa_h, gamma: self.gamma_h },
            Polarization::V => ModeRates { g: self.g_v, kappa: self.kappa_v, gamma: self.gamma_v },
        }
    }

    /// Rescale every rate by `1 / kappa_h`, so that `kappa_h == 1`.
    pub fn in_kappa_units(&self) -> Self {
        let k = self.kappa_h;
        CavityParams {
            g_h: self.g_h / k,
            g_v: self.g_v / k,
            kappa_h: 1.0,
            kappa_v: self.kappa_v / k,
            gamma_h: self.gamma_h / k,
            gamma_v: self.gamma_v / k,
        }
    }

    /// The Purcell ratio `g^2 / (kappa * gamma)` of one mode; infinite for a
    /// lossless atom.
    pub fn purcell(&self, pol: Polarization) -> f64 {
        let m = self.mode(pol);
        m.g * m.g / (m.kappa * m.gamma)
    }
}

/// Reflection, transmission and noise coefficients at one detuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralResponse {
    pub r: Complex64,
    pub t: Complex64,
    pub m: Complex64,
}

impl SpectralResponse {
    /// `|r|^2 + |t|^2 + |m|^2 - 1`.
    pub fn unitarity_residual(&self) -> f64 {
        self.r.norm_sqr() + self.t.norm_sqr() + self.m.norm_sqr() - 1.0
    }
}

/// Response of polarization mode `pol` at angular detuning `omega` (same rate
/// unit as `params`).
pub fn response(
    params: &CavityParams,
    pol: Polarization,
    branch: AtomBranch,
    omega: f64,
) -> Result<SpectralResponse> {
    let rates = params.mode(pol);
    rates.validate()?;
    if !omega.is_finite() {
        return Err(Error::domain(format!("omega must be finite, got {omega}")));
    }
    Ok(mode_response(rates, branch, omega))
}

/// Unchecked evaluation for a validated mode.
///
/// Numerator and denominator are multiplied through by `(i omega - gamma/2)`,
/// which removes the pole of the atomic susceptibility at `omega = 0` when
/// `gamma = 0`.
pub fn mode_response(rates: ModeRates, branch: AtomBranch, omega: f64) -> SpectralResponse {
    let ModeRates { g, kappa, gamma } = rates;
    let p0 = branch.projector();
    let i_omega = Complex64::new(0.0, omega);
    let cavity = Complex64::new(kappa, -omega);

    if p0 == 0.0 || g == 0.0 {
        // empty cavity
        return SpectralResponse {
            r: i_omega / cavity,
            t: Complex64::new(kappa, 0.0) / cavity,
            m: Complex64::new(0.0, 0.0),
        };
    }

    let atom = Complex64::new(-0.5 * gamma, omega);
    let coupling = g * g * p0;
    let denom = cavity * atom - coupling;
    SpectralResponse {
        r: (i_omega * atom + coupling) / denom,
        t: kappa * atom / denom,
        m: Complex64::new(0.0, (kappa * gamma).sqrt() * g * p0) / denom,
    }
}
