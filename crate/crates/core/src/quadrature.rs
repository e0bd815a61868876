//! Expectation values of smooth spectral functions under the normalized
//! Gaussian power spectrum of a pulse.
//!
//! The weight is `sqrt(2/pi)/dw * exp(-2 w^2/dw^2)`, a normal density with
//! standard deviation `dw/2`. Two methods are provided: Gauss–Hermite after the
//! substitution `u = sqrt(2) w / dw` (the weight becomes `exp(-u^2)/sqrt(pi)`
//! and is integrated exactly), and adaptive Simpson on `[-6 dw, 6 dw]` as an
//! independent cross-check.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::GaussHermite;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative error target for pulse-averaged quantities.
pub const TARGET_RELATIVE_ERROR: f64 = 1e-9;

pub const MIN_HERMITE_NODES: usize = 8;
pub const DEFAULT_HERMITE_NODES: usize = 64;
/// Gauss–Hermite doubles its node count up to this limit before giving up.
pub const MAX_HERMITE_NODES: usize = 512;
pub const MAX_SIMPSON_TOLERANCE: f64 = 1e-4;

const SIMPSON_MAX_DEPTH: u32 = 48;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum QuadratureMethod {
    /// `nodes` is the starting rule; it is doubled while the residual misses
    /// the target, up to [`MAX_HERMITE_NODES`].
    GaussHermite { nodes: usize },
    AdaptiveSimpson { tolerance: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    #[serde(flatten)]
    pub method: QuadratureMethod,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self::gauss_hermite(DEFAULT_HERMITE_NODES)
    }
}

impl QuadratureConfig {
    pub fn gauss_hermite(nodes: usize) -> Self {
        QuadratureConfig { method: QuadratureMethod::GaussHermite { nodes } }
    }

    pub fn adaptive_simpson(tolerance: f64) -> Self {
        QuadratureConfig { method: QuadratureMethod::AdaptiveSimpson { tolerance } }
    }

    pub fn validate(&self) -> Result<()> {
        match self.method {
            QuadratureMethod::GaussHermite { nodes } if nodes < MIN_HERMITE_NODES => Err(
                Error::domain(format!("gauss-hermite needs at least {MIN_HERMITE_NODES} nodes, got {nodes}")),
            ),
            QuadratureMethod::AdaptiveSimpson { tolerance }
                if !(tolerance > 0.0 && tolerance <= MAX_SIMPSON_TOLERANCE) =>
            {
                Err(Error::domain(format!(
                    "simpson tolerance must lie in (0, {MAX_SIMPSON_TOLERANCE:e}], got {tolerance}"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// A quadrature result with its error estimate (absolute, max over components).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<const N: usize> {
    pub value: [f64; N],
    pub residual: f64,
}

/// `E[f(w)]` for `w` distributed with the normalized Gaussian pulse spectrum
/// of bandwidth `dw`.
///
/// Fails with [`Error::Numerical`] if the residual estimate exceeds
/// [`TARGET_RELATIVE_ERROR`] relative to the largest component (floored at 1).
pub fn gaussian_expectation<const N: usize, F>(
    config: &QuadratureConfig,
    dw: f64,
    f: F,
) -> Result<Estimate<N>>
where
    F: Fn(f64) -> [f64; N],
{
    config.validate()?;
    if !(dw.is_finite() && dw > 0.0) {
        return Err(Error::domain(format!("bandwidth must be positive and finite, got {dw}")));
    }
    let est = match config.method {
        QuadratureMethod::GaussHermite { nodes } => hermite(nodes, dw, &f),
        QuadratureMethod::AdaptiveSimpson { tolerance } => simpson(tolerance, dw, &f)?,
    };
    let scale = est.value.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if !(est.residual <= TARGET_RELATIVE_ERROR * scale) || est.value.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical {
            message: "pulse quadrature did not converge".into(),
            residual: est.residual,
        });
    }
    Ok(est)
}

type Rule = Arc<Vec<(f64, f64)>>;

fn hermite_rule(nodes: usize) -> Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(rule) = cache.lock().unwrap().get(&nodes) {
        return rule.clone();
    }
    let gh = GaussHermite::new(nodes).expect("node count validated >= 2");
    let mut pairs: Vec<(f64, f64)> = gh.nodes().copied().zip(gh.weights().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let rule = Arc::new(pairs);
    cache.lock().unwrap().insert(nodes, rule.clone());
    rule
}

fn hermite_sum<const N: usize, F: Fn(f64) -> [f64; N]>(nodes: usize, dw: f64, f: &F) -> [f64; N] {
    let rule = hermite_rule(nodes);
    let scale = dw / std::f64::consts::SQRT_2;
    let norm = 1.0 / PI.sqrt();
    let mut acc = [0.0; N];
    for &(u, w) in rule.iter() {
        let y = f(scale * u);
        for (a, v) in acc.iter_mut().zip(y) {
            *a += w * norm * v;
        }
    }
    acc
}

/// The residual is the change when the node count is doubled.
fn hermite<const N: usize, F: Fn(f64) -> [f64; N]>(nodes: usize, dw: f64, f: &F) -> Estimate<N> {
    let mut n = nodes;
    let mut value = hermite_sum(n, dw, f);
    loop {
        let fine = hermite_sum(2 * n, dw, f);
        let residual = value.iter().zip(fine).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let scale = value.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if residual <= TARGET_RELATIVE_ERROR * scale || 2 * n >= MAX_HERMITE_NODES {
            return Estimate { value, residual };
        }
        value = fine;
        n *= 2;
    }
}

fn simpson<const N: usize, F: Fn(f64) -> [f64; N]>(
    tolerance: f64,
    dw: f64,
    f: &F,
) -> Result<Estimate<N>> {
    let density = |w: f64| -> [f64; N] {
        let rho = (2.0 / PI).sqrt() / dw * (-2.0 * w * w / (dw * dw)).exp();
        f(w).map(|v| rho * v)
    };
    let (a, b) = (-6.0 * dw, 6.0 * dw);
    let fa = density(a);
    let fb = density(b);
    let m = 0.5 * (a + b);
    let fm = density(m);
    let whole = simpson_rule(a, b, &fa, &fm, &fb);
    let mut residual = 0.0;
    let value = simpson_step(&density, a, b, fa, fm, fb, whole, tolerance, SIMPSON_MAX_DEPTH, &mut residual)?;
    Ok(Estimate { value, residual })
}

fn simpson_rule<const N: usize>(a: f64, b: f64, fa: &[f64; N], fm: &[f64; N], fb: &[f64; N]) -> [f64; N] {
    let h = (b - a) / 6.0;
    std::array::from_fn(|k| h * (fa[k] + 4.0 * fm[k] + fb[k]))
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<const N: usize, F: Fn(f64) -> [f64; N]>(
    f: &F,
    a: f64,
    b: f64,
    fa: [f64; N],
    fm: [f64; N],
    fb: [f64; N],
    whole: [f64; N],
    tol: f64,
    depth: u32,
    residual: &mut f64,
) -> Result<[f64; N]> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson_rule(a, m, &fa, &flm, &fm);
    let right = simpson_rule(m, b, &fm, &frm, &fb);
    let delta = (0..N).fold(0.0f64, |acc, k| acc.max((left[k] + right[k] - whole[k]).abs()));
    if delta <= 15.0 * tol {
        *residual += delta / 15.0;
        // Richardson correction
        return Ok(std::array::from_fn(|k| {
            left[k] + right[k] + (left[k] + right[k] - whole[k]) / 15.0
        }));
    }
    if depth == 0 {
        return Err(Error::Numerical {
            message: "adaptive simpson exceeded its recursion depth".into(),
            residual: delta / 15.0,
        });
    }
    let l = simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, residual)?;
    let r = simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, residual)?;
    Ok(std::array::from_fn(|k| l[k] + r[k]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_is_normalized() {
        for cfg in [QuadratureConfig::default(), QuadratureConfig::adaptive_simpson(1e-12)] {
            for dw in [1e-3, 0.1, 3.0] {
                let e = gaussian_expectation(&cfg, dw, |_| [1.0]).unwrap();
                assert!((e.value[0] - 1.0).abs() < 1e-12, "{cfg:?} {dw} {e:?}");
            }
        }
    }

    #[test]
    fn second_moment_is_a_quarter_bandwidth_squared() {
        let dw = 0.37;
        let e = gaussian_expectation(&QuadratureConfig::default(), dw, |w| [w * w, w * w * w * w]).unwrap();
        assert!((e.value[0] - dw * dw / 4.0).abs() < 1e-15);
        // fourth moment of N(0, s^2) is 3 s^4
        assert!((e.value[1] - 3.0 * (dw / 2.0).powi(4)).abs() < 1e-15);
    }

    #[test]
    fn methods_agree_on_a_lorentzian() {
        let f = |w: f64| [1.0 / (1.0 + w * w)];
        let gh = gaussian_expectation(&QuadratureConfig::default(), 0.3, f).unwrap();
        let si = gaussian_expectation(&QuadratureConfig::adaptive_simpson(1e-12), 0.3, f).unwrap();
        assert!((gh.value[0] - si.value[0]).abs() < 1e-10);
    }

    #[test]
    fn broadband_pulse_escalates_nodes() {
        let f = |w: f64| [1.0 / (1.0 + w * w)];
        let gh = gaussian_expectation(&QuadratureConfig::default(), 1.4, f).unwrap();
        let si = gaussian_expectation(&QuadratureConfig::adaptive_simpson(1e-12), 1.4, f).unwrap();
        assert!((gh.value[0] - si.value[0]).abs() < 1e-9, "{gh:?} {si:?}");
    }

    #[test]
    fn rejects_invalid_configs() {
        assert!(QuadratureConfig::gauss_hermite(4).validate().is_err());
        assert!(QuadratureConfig::adaptive_simpson(0.0).validate().is_err());
        assert!(QuadratureConfig::adaptive_simpson(1e-3).validate().is_err());
        assert!(QuadratureConfig::adaptive_simpson(1e-4).validate().is_ok());
        assert!(gaussian_expectation(&QuadratureConfig::default(), 0.0, |_| [1.0]).is_err());
    }

    #[test]
    fn unresolved_integrand_reports_residual() {
        // a pole 0.01 bandwidths off the real axis defeats even the largest rule
        let cfg = QuadratureConfig::gauss_hermite(8);
        match gaussian_expectation(&cfg, 1.0, |w| [1e-4 / (1e-4 + w * w)]) {
            Err(Error::Numerical { residual, .. }) => assert!(residual > 1e-9),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
