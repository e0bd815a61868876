//! Pulse-averaged gate performance.
//!
//! A single-photon pulse with normalized spectral amplitude `f(w)` hits the
//! cavity. For the atom in `|1>` it is transmitted with `T(w)`, for `|0>`
//! reflected with `R(w)`. The surviving probabilities `t`, `r` and the
//! normalized overlaps `xi` with the nominal pulse shape determine the loss
//! probability and the fidelity of the CSWAP output state:
//!
//! ```text
//! p = 1 - (t_h t_v + r_h r_v) / 2
//! F = |xi_h0 xi_v0 + xi_h1 xi_v1|^2 / 4
//! ```
//!
//! `f` is the Gaussian `|f(w)|^2 = sqrt(2/pi)/dw * exp(-2 w^2 / dw^2)`, which
//! has unit L2 norm.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cavity::{mode_response, AtomBranch, CavityParams, Polarization};
use crate::error::{Error, Result};
use crate::quadrature::{gaussian_expectation, QuadratureConfig};

const INVARIANT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    /// Spectral width `dw`, in the rate unit of the cavity parameters.
    pub bandwidth: f64,
}

impl PulseSpec {
    pub fn new(bandwidth: f64) -> Result<Self> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::domain(format!("pulse bandwidth must be positive and finite, got {bandwidth}")));
        }
        Ok(PulseSpec { bandwidth })
    }

    /// `|f(w)|^2`.
    pub fn spectral_density(&self, omega: f64) -> f64 {
        let dw = self.bandwidth;
        (2.0 / std::f64::consts::PI).sqrt() / dw * (-2.0 * omega * omega / (dw * dw)).exp()
    }
}

/// Pulse-averaged transmission/reflection probabilities and mode overlaps.
///
/// Suffix `1` is the decoupled branch (atom in `|1>`, transmission), suffix
/// `0` the coupled branch (atom in `|0>`, reflection).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapSet {
    pub t_h1: f64,
    pub t_v1: f64,
    pub r_h0: f64,
    pub r_v0: f64,
    pub xi_h1: Complex64,
    pub xi_v1: Complex64,
    pub xi_h0: Complex64,
    pub xi_v0: Complex64,
    /// Absolute quadrature error estimate of the raw integrals.
    pub quadrature_residual: f64,
}

impl OverlapSet {
    /// Every entry equal to the ideal lossless, distortion-free value.
    pub fn ideal() -> Self {
        let one = Complex64::new(1.0, 0.0);
        OverlapSet {
            t_h1: 1.0,
            t_v1: 1.0,
            r_h0: 1.0,
            r_v0: 1.0,
            xi_h1: one,
            xi_v1: one,
            xi_h0: -one,
            xi_v0: -one,
            quadrature_residual: 0.0,
        }
    }

    pub fn transmission(&self, pol: Polarization) -> (f64, Complex64) {
        match pol {
            Polarization::H => (self.t_h1, self.xi_h1),
            Polarization::V => (self.t_v1, self.xi_v1),
        }
    }

    pub fn reflection(&self, pol: Polarization) -> (f64, Complex64) {
        match pol {
            Polarization::H => (self.r_h0, self.xi_h0),
            Polarization::V => (self.r_v0, self.xi_v0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [("t_h1", self.t_h1), ("t_v1", self.t_v1), ("r_h0", self.r_h0), ("r_v0", self.r_v0)];
        for (name, v) in probs {
            if !(v.is_finite() && v >= 0.0 && v <= 1.0 + INVARIANT_SLACK) {
                return Err(Error::domain(format!("{name} = {v} is not a probability")));
            }
        }
        let xis = [("xi_h1", self.xi_h1), ("xi_v1", self.xi_v1), ("xi_h0", self.xi_h0), ("xi_v0", self.xi_v0)];
        for (name, x) in xis {
            if !(x.re.is_finite() && x.im.is_finite() && x.norm() <= 1.0 + INVARIANT_SLACK) {
                return Err(Error::domain(format!("|{name}| = {} exceeds 1", x.norm())));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateMetrics {
    /// Probability that at least one photon is lost.
    pub p: f64,
    /// Overlap of the heralded output with the ideal entangled state.
    #[serde(rename = "F")]
    pub fidelity: f64,
}

/// Pulse-averaged overlaps for both polarizations and both atomic branches.
pub fn overlaps(params: &CavityParams, pulse: &PulseSpec, quad: &QuadratureConfig) -> Result<OverlapSet> {
    params.validate()?;
    PulseSpec::new(pulse.bandwidth)?;
    let h = params.mode(Polarization::H);
    let v = params.mode(Polarization::V);

    // [|T|^2, Re T, Im T, |R|^2, Re R, Im R] for h then v
    let est = gaussian_expectation(quad, pulse.bandwidth, |w| {
        let mut out = [0.0; 12];
        for (k, rates) in [h, v].into_iter().enumerate() {
            let t = mode_response(rates, AtomBranch::Decoupled, w).t;
            let r = mode_response(rates, AtomBranch::Coupled, w).r;
            out[6 * k..6 * k + 6].copy_from_slice(&[t.norm_sqr(), t.re, t.im, r.norm_sqr(), r.re, r.im]);
        }
        out
    })?;
    let x = est.value;
    let normalized = |prob: f64, re: f64, im: f64| {
        if prob > 0.0 {
            Complex64::new(re, im) / prob.sqrt()
        } else {
            Complex64::new(0.0, 0.0)
        }
    };
    let set = OverlapSet {
        t_h1: x[0],
        xi_h1: normalized(x[0], x[1], x[2]),
        r_h0: x[3],
        xi_h0: normalized(x[3], x[4], x[5]),
        t_v1: x[6],
        xi_v1: normalized(x[6], x[7], x[8]),
        r_v0: x[9],
        xi_v0: normalized(x[9], x[10], x[11]),
        quadrature_residual: est.residual,
    };
    set.validate()?;
    Ok(set)
}

/// Closed-form loss probability and fidelity.
pub fn metrics(ov: &OverlapSet) -> Result<GateMetrics> {
    ov.validate()?;
    let p = 1.0 - (ov.t_h1 * ov.t_v1 + ov.r_h0 * ov.r_v0) / 2.0;
    let fidelity = (ov.xi_h0 * ov.xi_v0 + ov.xi_h1 * ov.xi_v1).norm_sqr() / 4.0;
    Ok(GateMetrics { p, fidelity })
}

/// `overlaps` followed by `metrics`.
pub fn gate_metrics(params: &CavityParams, pulse: &PulseSpec, quad: &QuadratureConfig) -> Result<GateMetrics> {
    metrics(&overlaps(params, pulse, quad)?)
}

/// One grid point of a sweep. A failed point keeps its error instead of being
/// dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub g_over_kappa: f64,
    pub dw_over_kappa: f64,
    pub params: CavityParams,
    pub pulse: PulseSpec,
    pub result: Result<GateMetrics>,
}

/// Evaluate every `(params, bandwidth)` combination.
///
/// Points run in parallel; rows come back ordered by `(g_h/kappa_h,
/// dw/kappa_h)` regardless of scheduling.
pub fn sweep(params_grid: &[CavityParams], bandwidths: &[f64], quad: &QuadratureConfig) -> Result<Vec<SweepRow>> {
    if params_grid.is_empty() || bandwidths.is_empty() {
        return Err(Error::domain("sweep grids must be non-empty"));
    }
    for p in params_grid {
        p.validate()?;
    }
    for &b in bandwidths {
        PulseSpec::new(b)?;
    }
    quad.validate()?;

    let points: Vec<(CavityParams, PulseSpec)> = params_grid
        .iter()
        .flat_map(|p| bandwidths.iter().map(move |&b| (*p, PulseSpec { bandwidth: b })))
        .collect();
    let mut rows: Vec<SweepRow> = points
        .into_par_iter()
        .map(|(params, pulse)| SweepRow {
            g_over_kappa: params.g_h / params.kappa_h,
            dw_over_kappa: pulse.bandwidth / params.kappa_h,
            result: gate_metrics(&params, &pulse, quad),
            params,
            pulse,
        })
        .collect();
    rows.sort_by(|a, b| {
        a.g_over_kappa
            .total_cmp(&b.g_over_kappa)
            .then(a.dw_over_kappa.total_cmp(&b.dw_over_kappa))
    });
    Ok(rows)
}

/// Sweep with `kappa = 1`, equal polarizations and fixed `gamma`, the setting
/// of the standard bandwidth/coupling studies.
pub fn sweep_symmetric(
    g_over_kappa: &[f64],
    dw_over_kappa: &[f64],
    gamma_over_kappa: f64,
    quad: &QuadratureConfig,
) -> Result<Vec<SweepRow>> {
    let grid = g_over_kappa
        .iter()
        .map(|&g| CavityParams::symmetric(g, 1.0, gamma_over_kappa))
        .collect::<Result<Vec<_>>>()?;
    sweep(&grid, dw_over_kappa, quad)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force oracle: trapezoid rule on a uniform grid over
    /// `[-6 dw, 6 dw]`, evaluating the response formulas directly.
    fn trapezoid_oracle(params: &CavityParams, dw: f64, points: usize) -> (f64, f64, Complex64, Complex64) {
        let pulse = PulseSpec { bandwidth: dw };
        let (a, b) = (-6.0 * dw, 6.0 * dw);
        let step = (b - a) / (points - 1) as f64;
        let rates = params.mode(Polarization::H);
        let (mut r0, mut t1) = (0.0, 0.0);
        let (mut xr, mut xt) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for i in 0..points {
            let w = a + step * i as f64;
            let wt = if i == 0 || i == points - 1 { 0.5 } else { 1.0 } * step * pulse.spectral_density(w);
            let r = mode_response(rates, AtomBranch::Coupled, w).r;
            let t = mode_response(rates, AtomBranch::Decoupled, w).t;
            r0 += wt * r.norm_sqr();
            t1 += wt * t.norm_sqr();
            xr += wt * r;
            xt += wt * t;
        }
        (r0, t1, xr / r0.sqrt(), xt / t1.sqrt())
    }

    #[test]
    fn narrowband_transmission_expansion() {
        // t1 = 1 - <w^2>/kappa^2 + ..., <w^2> = dw^2/4
        let p = CavityParams::symmetric(3.0, 1.0, 0.7).unwrap();
        let ov = overlaps(&p, &PulseSpec::new(0.01).unwrap(), &QuadratureConfig::default()).unwrap();
        assert!((ov.t_h1 - 0.999975).abs() <= 1e-8);
        let (_, t1, _, _) = trapezoid_oracle(&p, 0.01, 20_001);
        assert!((ov.t_h1 - t1).abs() < 1e-12);
    }

    #[test]
    fn atomic_preset_matches_brute_force() {
        let p = CavityParams::symmetric(32.0, 4.2, 2.6).unwrap();
        let dw = 0.42;
        let ov = overlaps(&p, &PulseSpec::new(dw).unwrap(), &QuadratureConfig::default()).unwrap();
        let (r0, t1, xr, xt) = trapezoid_oracle(&p, dw, 1_000_001);
        assert!((ov.r_h0 - r0).abs() < 1e-10, "{} vs {r0}", ov.r_h0);
        assert!((ov.t_h1 - t1).abs() < 1e-10);
        assert!((ov.xi_h0 - xr).norm() < 1e-10);
        assert!((ov.xi_h1 - xt).norm() < 1e-10);
        assert!((ov.r_h0 - 0.9894).abs() < 5e-5);
        assert!((ov.t_h1 - 0.9975).abs() < 5e-5);
    }

    #[test]
    fn zero_bandwidth_limit() {
        let p = CavityParams::symmetric(4.0, 1.0, 0.0).unwrap();
        let ov = overlaps(&p, &PulseSpec::new(1e-6).unwrap(), &QuadratureConfig::default()).unwrap();
        for v in [ov.t_h1, ov.t_v1, ov.r_h0, ov.r_v0] {
            assert!((v - 1.0).abs() < 1e-9);
        }
        assert!((ov.xi_h0 + 1.0).norm() < 1e-9);
        assert!((ov.xi_h1 - 1.0).norm() < 1e-9);
    }

    #[test]
    fn ideal_overlaps_give_ideal_metrics() {
        let mut ov = OverlapSet::ideal();
        ov.xi_h0 = Complex64::new(1.0, 0.0);
        ov.xi_v0 = Complex64::new(1.0, 0.0);
        assert_eq!(metrics(&ov).unwrap(), GateMetrics { p: 0.0, fidelity: 1.0 });
        assert_eq!(metrics(&OverlapSet::ideal()).unwrap(), GateMetrics { p: 0.0, fidelity: 1.0 });
    }

    #[test]
    fn metrics_rejects_invalid_overlaps() {
        let mut ov = OverlapSet::ideal();
        ov.t_h1 = 1.1;
        assert!(matches!(metrics(&ov), Err(Error::Domain(_))));
        let mut ov = OverlapSet::ideal();
        ov.xi_v1 = Complex64::new(0.8, 0.8);
        assert!(metrics(&ov).is_err());
        let mut ov = OverlapSet::ideal();
        ov.r_v0 = f64::NAN;
        assert!(metrics(&ov).is_err());
    }

    #[test]
    fn doubling_nodes_does_not_move_presets() {
        let cases = [
            (CavityParams::symmetric(32.0, 4.2, 2.6).unwrap(), 0.42),
            (CavityParams::symmetric(0.66, 6.0, 0.001).unwrap(), 0.1 * 0.66 * 0.66 / 6.0),
        ];
        for (p, dw) in cases {
            let pulse = PulseSpec::new(dw).unwrap();
            let a = gate_metrics(&p, &pulse, &QuadratureConfig::gauss_hermite(64)).unwrap();
            let b = gate_metrics(&p, &pulse, &QuadratureConfig::gauss_hermite(128)).unwrap();
            assert!((a.p - b.p).abs() < 1e-10);
            assert!((a.fidelity - b.fidelity).abs() < 1e-10);
        }
    }

    #[test]
    fn simpson_cross_check() {
        let p = CavityParams::symmetric(3.0, 1.0, 1.0).unwrap();
        let pulse = PulseSpec::new(0.2).unwrap();
        let a = gate_metrics(&p, &pulse, &QuadratureConfig::default()).unwrap();
        let b = gate_metrics(&p, &pulse, &QuadratureConfig::adaptive_simpson(1e-12)).unwrap();
        assert!((a.p - b.p).abs() < 1e-9);
        assert!((a.fidelity - b.fidelity).abs() < 1e-9);
    }

    #[test]
    fn constant_response_gives_unit_fidelity() {
        for (g, kappa) in [(5.0, 1.0), (0.5, 1.0), (0.11, 1.0)] {
            let p = CavityParams::symmetric(g, kappa, 0.0).unwrap();
            let dw = 1e-3 * kappa.min(g * g / kappa);
            let m = gate_metrics(&p, &PulseSpec::new(dw).unwrap(), &QuadratureConfig::default()).unwrap();
            assert!((m.fidelity - 1.0).abs() < 1e-6, "{g}: {m:?}");
        }
    }

    #[test]
    fn lossless_atom_loses_only_to_bandwidth() {
        // with gamma = 0 the only loss is the wrong-port leakage of each branch
        for (g, dw) in [(2.0, 0.3), (0.7, 0.1), (6.0, 0.05), (0.5, 0.2)] {
            let p = CavityParams::symmetric(g, 1.0, 0.0).unwrap();
            let ov = overlaps(&p, &PulseSpec::new(dw).unwrap(), &QuadratureConfig::default()).unwrap();
            let m = metrics(&ov).unwrap();
            let worst = ov.t_h1.min(ov.r_h0);
            assert!(m.p >= 0.0);
            assert!(m.p <= 1.0 - worst * worst + 1e-12, "{g} {dw}: {m:?} {ov:?}");
        }
        // once g^2/kappa >> kappa, reflection is the better branch and the
        // transmission bandwidth bounds the loss
        let p = CavityParams::symmetric(6.0, 1.0, 0.0).unwrap();
        let ov = overlaps(&p, &PulseSpec::new(0.05).unwrap(), &QuadratureConfig::default()).unwrap();
        assert!(metrics(&ov).unwrap().p <= 1.0 - ov.t_h1 * ov.t_h1);
    }

    #[test]
    fn equal_modes_give_equal_entries() {
        let p = CavityParams::symmetric(2.3, 0.9, 0.4).unwrap();
        let ov = overlaps(&p, &PulseSpec::new(0.17).unwrap(), &QuadratureConfig::default()).unwrap();
        assert_eq!(ov.t_h1, ov.t_v1);
        assert_eq!(ov.r_h0, ov.r_v0);
        assert_eq!(ov.xi_h0, ov.xi_v0);
        assert_eq!(ov.xi_h1, ov.xi_v1);
    }

    #[test]
    fn sweep_rows_are_sorted_and_match_pointwise() {
        let quad = QuadratureConfig::default();
        let rows = sweep_symmetric(&[10.0, 3.0, 6.0], &[0.1, 0.05], 1.0, &quad).unwrap();
        assert_eq!(rows.len(), 6);
        for w in rows.windows(2) {
            assert!((w[0].g_over_kappa, w[0].dw_over_kappa) < (w[1].g_over_kappa, w[1].dw_over_kappa));
        }
        for row in &rows {
            let direct = gate_metrics(&row.params, &row.pulse, &quad).unwrap();
            assert_eq!(row.result.as_ref().unwrap(), &direct);
        }
    }

    #[test]
    fn sweep_keeps_failed_points() {
        let quad = QuadratureConfig::gauss_hermite(8);
        // very narrow Lorentzian relative to the pulse: 8 nodes cannot resolve it
        let rows = sweep_symmetric(&[0.01], &[50.0], 0.0, &quad).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(matches!(rows[0].result, Err(Error::Numerical { .. })));
    }

    #[test]
    fn sweep_rejects_empty_grids() {
        assert!(sweep(&[], &[0.1], &QuadratureConfig::default()).is_err());
        assert!(sweep_symmetric(&[1.0], &[], 1.0, &QuadratureConfig::default()).is_err());
        assert!(sweep_symmetric(&[1.0], &[f64::NAN], 1.0, &QuadratureConfig::default()).is_err());
    }
}
