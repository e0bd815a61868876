//! Circuit-level model of the imperfect cavity CSWAP.
//!
//! Each photon carries a polarization qubit plus a three-way mode register:
//! the nominal pulse shape (`Ideal`), one orthogonal `Distorted` bucket, and
//! `Lost` (vacuum, polarization fixed to `h`). Loss is recorded in an
//! environment that is traced out, so a lost photon keeps no coherence with the
//! rest of the register.
//!
//! The joint space is ordered `atom (2) x port l (3 modes x 2 pol) x port r
//! (3 modes x 2 pol)`, 72 dimensions in total.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::cavity::{CavityParams, Polarization};
use crate::error::{Error, Result};
use crate::pulse::{overlaps, OverlapSet, PulseSpec};
use crate::quadrature::QuadratureConfig;

pub const DIM: usize = 72;
const TRACE_TOLERANCE: f64 = 1e-10;
const SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Mode {
    Ideal = 0,
    Distorted = 1,
    Lost = 2,
}

/// Joint basis index.
pub fn index(atom: usize, l: (Mode, usize), r: (Mode, usize)) -> usize {
    atom * 36 + (l.0 as usize * 2 + l.1) * 6 + (r.0 as usize * 2 + r.1)
}

fn decode(i: usize) -> (usize, (usize, usize), (usize, usize)) {
    let atom = i / 36;
    let l = (i % 36) / 6;
    let r = i % 6;
    (atom, (l / 2, l % 2), (r / 2, r % 2))
}

/// Survival probabilities and mode overlaps of one polarization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationChannel {
    pub survive_reflect: f64,
    pub survive_transmit: f64,
    pub xi_reflect: Complex64,
    pub xi_transmit: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisyGateModel {
    pub h: PolarizationChannel,
    pub v: PolarizationChannel,
}

impl NoisyGateModel {
    pub fn from_overlaps(ov: &OverlapSet) -> Result<Self> {
        ov.validate()?;
        let model = NoisyGateModel {
            h: PolarizationChannel {
                survive_reflect: ov.r_h0,
                survive_transmit: ov.t_h1,
                xi_reflect: ov.xi_h0,
                xi_transmit: ov.xi_h1,
            },
            v: PolarizationChannel {
                survive_reflect: ov.r_v0,
                survive_transmit: ov.t_v1,
                xi_reflect: ov.xi_v0,
                xi_transmit: ov.xi_v1,
            },
        };
        model.validate()?;
        Ok(model)
    }

    /// Lossless and distortion-free; reflection carries the `-1` sign.
    pub fn ideal() -> Self {
        let pol = PolarizationChannel {
            survive_reflect: 1.0,
            survive_transmit: 1.0,
            xi_reflect: Complex64::new(-1.0, 0.0),
            xi_transmit: Complex64::new(1.0, 0.0),
        };
        NoisyGateModel { h: pol, v: pol }
    }

    pub fn polarization(&self, pol: Polarization) -> &PolarizationChannel {
        match pol {
            Polarization::H => &self.h,
            Polarization::V => &self.v,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, c) in [("h", &self.h), ("v", &self.v)] {
            for (what, p) in [("survive_reflect", c.survive_reflect), ("survive_transmit", c.survive_transmit)] {
                if !(p.is_finite() && (0.0..=1.0 + SLACK).contains(&p)) {
                    return Err(Error::domain(format!("{name}.{what} = {p} is not a probability")));
                }
            }
            for (what, x) in [("xi_reflect", c.xi_reflect), ("xi_transmit", c.xi_transmit)] {
                if !(x.re.is_finite() && x.im.is_finite() && x.norm() <= 1.0 + SLACK) {
                    return Err(Error::domain(format!("|{name}.{what}| = {} exceeds 1", x.norm())));
                }
            }
        }
        Ok(())
    }

    /// `(survival, xi)` for a photon of polarization index `pol` in atomic
    /// branch `atom` (`0` reflects, `1` transmits).
    fn coefficients(&self, atom: usize, pol: usize) -> (f64, Complex64) {
        let c = if pol == 0 { &self.h } else { &self.v };
        if atom == 0 {
            (c.survive_reflect, c.xi_reflect)
        } else {
            (c.survive_transmit, c.xi_transmit)
        }
    }
}

/// Model coefficients from the pulse-averaged overlaps (shared computation
/// path with the closed-form metrics).
pub fn build_model(params: &CavityParams, pulse: &PulseSpec, quad: &QuadratureConfig) -> Result<NoisyGateModel> {
    NoisyGateModel::from_overlaps(&overlaps(params, pulse, quad)?)
}

/// Output density operator together with the ideal CSWAP output of the same
/// input, on the `(atom, pol_l, pol_r)` qubits (index `4 atom + 2 l + r`).
#[derive(Debug, Clone, PartialEq)]
pub struct OutputDensity {
    pub rho: DMatrix<Complex64>,
    pub ideal_output: [Complex64; 8],
}

impl OutputDensity {
    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    /// Unit trace, Hermitian, and positive semidefinite within `1e-10`.
    pub fn validate(&self) -> Result<()> {
        if self.rho.shape() != (DIM, DIM) {
            return Err(Error::domain(format!("density operator must be {DIM}x{DIM}")));
        }
        let tr = self.trace();
        if (tr - 1.0).norm() > TRACE_TOLERANCE {
            return Err(Error::domain(format!("density operator trace is {tr}, expected 1")));
        }
        let herm = (&self.rho - self.rho.adjoint()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if herm > TRACE_TOLERANCE {
            return Err(Error::domain(format!("density operator is not Hermitian (deviation {herm:e})")));
        }
        let min_eig = self.rho.clone().symmetric_eigenvalues().min();
        if min_eig < -TRACE_TOLERANCE {
            return Err(Error::domain(format!("density operator has negative eigenvalue {min_eig:e}")));
        }
        Ok(())
    }

    fn present_weight(&self, atom: Option<usize>) -> f64 {
        (0..DIM)
            .filter(|&i| {
                let (a, l, r) = decode(i);
                l.0 != Mode::Lost as usize && r.0 != Mode::Lost as usize && atom.map_or(true, |x| x == a)
            })
            .map(|i| self.rho[(i, i)].re)
            .sum()
    }

    fn atom_weight(&self, atom: usize) -> f64 {
        (atom * 36..(atom + 1) * 36).map(|i| self.rho[(i, i)].re).sum()
    }
}

/// Apply the noisy CSWAP to `atom (x) photons` (photon basis `hh, hv, vh, vv`
/// for ports `l, r`).
///
/// With the atom in `|0>` both photons reflect and keep their port; with the
/// atom in `|1>` they transmit and exchange ports.
pub fn apply_noisy_cswap(atom: [Complex64; 2], photons: [Complex64; 4], model: &NoisyGateModel) -> Result<OutputDensity> {
    model.validate()?;
    let na: f64 = atom.iter().map(|a| a.norm_sqr()).sum();
    let np: f64 = photons.iter().map(|a| a.norm_sqr()).sum();
    if (na - 1.0).abs() > SLACK * 10.0 || (np - 1.0).abs() > SLACK * 10.0 {
        return Err(Error::domain("input states must be normalized"));
    }

    // environment label: per input photon (l, r), `None` if it survived or the
    // (atom branch, polarization) that was lost
    type Env = (Option<(usize, usize)>, Option<(usize, usize)>);
    let mut terms: BTreeMap<Env, Vec<Complex64>> = BTreeMap::new();
    let mut ideal_output = [Complex64::new(0.0, 0.0); 8];

    for (a, &ca) in atom.iter().enumerate() {
        for (k, &cp) in photons.iter().enumerate() {
            let amp = ca * cp;
            if amp == Complex64::new(0.0, 0.0) {
                continue;
            }
            let (mu_l, mu_r) = (k >> 1, k & 1);
            // polarization arriving at each output port
            let (out_l, out_r) = if a == 0 { (mu_l, mu_r) } else { (mu_r, mu_l) };
            ideal_output[4 * a + 2 * out_l + out_r] += amp;

            // photon from input l lands on port l (a = 0) or r (a = 1)
            let from_l = photon_outcomes(model, a, mu_l);
            let from_r = photon_outcomes(model, a, mu_r);
            for (reg_l, c_l, lost_l) in &from_l {
                for (reg_r, c_r, lost_r) in &from_r {
                    let (port_l, port_r) = if a == 0 { (*reg_l, *reg_r) } else { (*reg_r, *reg_l) };
                    let env: Env = (lost_l.map(|p| (a, p)), lost_r.map(|p| (a, p)));
                    let v = terms.entry(env).or_insert_with(|| vec![Complex64::new(0.0, 0.0); DIM]);
                    v[index(a, port_l, port_r)] += amp * c_l * c_r;
                }
            }
        }
    }

    let mut rho = DMatrix::zeros(DIM, DIM);
    for v in terms.values() {
        let col = nalgebra::DVector::from_column_slice(v);
        rho += &col * col.adjoint();
    }
    Ok(OutputDensity { rho, ideal_output })
}

/// Register states of one photon after the cavity: `(register, amplitude,
/// lost polarization)`.
fn photon_outcomes(model: &NoisyGateModel, atom: usize, pol: usize) -> Vec<((Mode, usize), Complex64, Option<usize>)> {
    let (survive, xi) = model.coefficients(atom, pol);
    let s = survive.min(1.0).sqrt();
    let distorted = (1.0 - xi.norm_sqr()).max(0.0).sqrt();
    let mut out = vec![((Mode::Ideal, pol), s * xi, None)];
    if distorted > 0.0 {
        out.push(((Mode::Distorted, pol), Complex64::new(s * distorted, 0.0), None));
    }
    if survive < 1.0 {
        out.push(((Mode::Lost, 0), Complex64::new((1.0 - survive).sqrt(), 0.0), Some(pol)));
    }
    out
}

/// Typical input: atom in `(|0> + |1>)/sqrt(2)`, photons `|h>_l |v>_r`.
pub fn apply_noisy_cswap_typical(model: &NoisyGateModel) -> Result<OutputDensity> {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    apply_noisy_cswap([s, s], [zero, Complex64::new(1.0, 0.0), zero, zero], model)
}

/// Probability that at least one photon is missing from the output.
pub fn loss_probability(out: &OutputDensity) -> Result<f64> {
    out.validate()?;
    Ok(1.0 - out.present_weight(None))
}

/// Overlap of the ideal-mode, both-present block with the ideal output, each
/// atomic branch renormalized by its own survival probability.
pub fn fidelity(out: &OutputDensity) -> Result<f64> {
    out.validate()?;
    let mut scale = [0.0; 2];
    for a in 0..2 {
        let pa = out.atom_weight(a);
        let present = out.present_weight(Some(a));
        scale[a] = if present > 0.0 { (pa / present).sqrt() } else { 0.0 };
    }
    let ideal = (Mode::Ideal, 0);
    let idx = |k: usize| {
        let (a, l, r) = (k >> 2, (k >> 1) & 1, k & 1);
        (a, index(a, (ideal.0, l), (ideal.0, r)))
    };
    let mut f = Complex64::new(0.0, 0.0);
    for i in 0..8 {
        let (ai, ri) = idx(i);
        for j in 0..8 {
            let (aj, rj) = idx(j);
            f += out.ideal_output[i].conj() * scale[ai] * out.rho[(ri, rj)] * scale[aj] * out.ideal_output[j];
        }
    }
    Ok(f.re)
}
