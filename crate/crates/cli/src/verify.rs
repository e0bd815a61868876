//! Invariant suites behind `fredkin verify`.

use std::fmt::Write as _;

use clap::ValueEnum;
use fredkin_core::cavity::{mode_response, ModeRates};
use fredkin_core::channel::{apply_noisy_cswap_typical, fidelity, loss_probability};
use fredkin_core::statevector::{
    ancilla_branch_operators, apply, cpf_feedforward_circuit, cpf_target, controlled_zz_target, cswap_multi,
    swap_test,
};
use fredkin_core::{
    build_model, equivalent_up_to_phase, metrics, overlaps, AtomBranch, CavityParams, Circuit, Complex64, Gate,
    PulseSpec, PureState, QuadratureConfig, SingleQubitGate,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::presets::Preset;
use crate::{exit, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// Gate-level checks; no spectral integration.
    Circuits,
    /// Cavity response, pulse metrics and the noisy channel.
    Physics,
    All,
}

/// Deliberate defects, for checking that the suites catch them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Faults {
    /// Flip the sign of the `g^2 P0` term in the reflection numerator.
    pub reflection_sign: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub result: Result<String, String>,
}

type CheckFn = fn(Faults) -> Result<String, String>;

const SEED: u64 = 0x5eed;

pub const CIRCUIT_CHECKS: [(&str, CheckFn); 6] = [
    ("circuits.cswap_permutation", cswap_permutation),
    ("circuits.controlled_zz_identity", controlled_zz_identity),
    ("circuits.cpf_feedforward", cpf_feedforward_branches),
    ("circuits.swap_test_overlap", swap_test_overlap),
    ("circuits.phase_equivalence", phase_equivalence),
    ("circuits.unitary_closure", unitary_closure),
];

pub const PHYSICS_CHECKS: [(&str, CheckFn); 6] = [
    ("cavity.unitarity", unitarity),
    ("cavity.branch_limits", branch_limits),
    ("pulse.atomic_preset", atomic_preset),
    ("pulse.quadrature_convergence", quadrature_convergence),
    ("channel.density_valid", channel_density),
    ("channel.closed_form_match", closed_form_match),
];

pub fn run(suite: Suite, faults: Faults) -> Vec<Check> {
    let mut table: Vec<(&'static str, CheckFn)> = Vec::new();
    if matches!(suite, Suite::Circuits | Suite::All) {
        table.extend(CIRCUIT_CHECKS);
    }
    if matches!(suite, Suite::Physics | Suite::All) {
        table.extend(PHYSICS_CHECKS);
    }
    table.into_iter().map(|(name, f)| Check { name, result: f(faults) }).collect()
}

pub fn report(checks: &[Check]) -> Outcome {
    let mut out = String::new();
    let mut failed = Vec::new();
    for c in checks {
        match &c.result {
            Ok(detail) => writeln!(out, "PASS {}: {detail}", c.name),
            Err(detail) => {
                failed.push(c.name);
                writeln!(out, "FAIL {}: {detail}", c.name)
            }
        }
        .expect("string write");
    }
    if failed.is_empty() {
        writeln!(out, "all {} invariants hold", checks.len()).expect("string write");
        Outcome::ok(out)
    } else {
        writeln!(out, "verification failed: {}", failed.join(", ")).expect("string write");
        Outcome { stdout: out, code: exit::VERIFICATION }
    }
}

fn ensure(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn core<T>(r: fredkin_core::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

// ---------------------------------------------------------------- circuits

fn cswap_permutation(_: Faults) -> Result<String, String> {
    let mut count = 0;
    for n in 3..=5 {
        for idx in 0..1usize << n {
            let s = core(PureState::basis(n, idx))?;
            let out = core(apply(&s, &Gate::cswap(0, 1, n - 1)))?;
            let bit = |i: usize, w: usize| (i >> (n - 1 - w)) & 1;
            let mut expect = idx;
            if bit(idx, 0) == 1 && bit(idx, 1) != bit(idx, n - 1) {
                expect ^= (1 << (n - 2)) | 1;
            }
            if out.amplitudes()[expect] != c(1.0, 0.0) {
                return Err(format!("n = {n}, basis {idx:0n$b} not sent to {expect:0n$b}"));
            }
            count += 1;
        }
    }
    // Two-qubit registers: wires 1,2 against 3,4.
    for idx in 0..32usize {
        let s = core(PureState::basis(5, idx))?;
        let out = core(cswap_multi(&s, 0, &[1, 2], &[3, 4]))?;
        let expect = if idx >> 4 == 1 { 16 | ((idx & 3) << 2) | ((idx >> 2) & 3) } else { idx };
        if out.amplitudes()[expect] != c(1.0, 0.0) {
            return Err(format!("register swap sends {idx:05b} elsewhere than {expect:05b}"));
        }
        count += 1;
    }
    Ok(format!("{count} basis states permuted correctly"))
}

fn controlled_zz_identity(_: Faults) -> Result<String, String> {
    let circuit = Circuit::new()
        .single(SingleQubitGate::Z, 1)
        .cswap(0, 1, 2)
        .single(SingleQubitGate::Z, 1)
        .cswap(0, 1, 2);
    let u = core(circuit.unitary(3))?;
    ensure(core(equivalent_up_to_phase(&u, &controlled_zz_target(), 1e-12))?, format!("{circuit} = |0><0| I + |1><1| Z Z"))
}

fn cpf_feedforward_branches(_: Faults) -> Result<String, String> {
    let circuit = cpf_feedforward_circuit();
    let branches = core(ancilla_branch_operators(&circuit))?;
    let target = cpf_target();
    for (bits, op) in &branches {
        // Each branch map carries amplitude 1/sqrt(2).
        let scaled = op.map(|z| z * std::f64::consts::SQRT_2);
        if !core(equivalent_up_to_phase(&scaled, &target, 1e-12))? {
            return Err(format!("branch {bits:?} is not the CPF gate"));
        }
    }
    ensure(branches.len() == 2, format!("{} branches, each CPF with weight 1/2", branches.len()))
}

fn swap_test_overlap(_: Faults) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for n in 1..=4 {
        for _ in 0..10 {
            let a = core(PureState::random(n, &mut rng))?;
            let b = core(PureState::random(n, &mut rng))?;
            let p = core(swap_test(&a, &b))?;
            let ov = core(a.inner(&b))?.norm_sqr();
            worst = worst.max((p - (1.0 - ov) / 2.0).abs());
        }
    }
    ensure(worst <= 1e-12, format!("max |p_minus - (1 - |<a|b>|^2)/2| = {worst:.3e}"))
}

fn phase_equivalence(_: Faults) -> Result<String, String> {
    let u = controlled_zz_target();
    let v = u.map(|z| z * c(0.6, 0.8));
    let w = u.map(|z| z * c(-1.0, 0.0)) + nalgebra::DMatrix::from_fn(8, 8, |i, j| if i == j && i == 7 { c(2.0, 0.0) } else { c(0.0, 0.0) });
    let same = core(equivalent_up_to_phase(&u, &v, 1e-12))?;
    let differ = core(equivalent_up_to_phase(&u, &w, 1e-12))?;
    ensure(same && !differ, "phase-shifted copy accepted, local change rejected".into())
}

fn unitary_closure(_: Faults) -> Result<String, String> {
    let circuit = Circuit::new()
        .single(SingleQubitGate::H, 0)
        .cswap(0, 1, 2)
        .single(SingleQubitGate::S, 2)
        .single(SingleQubitGate::Phase(0.3), 1)
        .cswap(0, 2, 1);
    let u = core(circuit.unitary(3))?;
    let err = (u.adjoint() * &u - nalgebra::DMatrix::identity(8, 8)).iter().fold(0.0f64, |m, z| m.max(z.norm()));
    ensure(err <= 1e-12, format!("max |U^dag U - I| = {err:.3e}"))
}

// ---------------------------------------------------------------- physics

fn random_params(rng: &mut ChaCha8Rng) -> ModeRates {
    ModeRates { g: rng.gen_range(0.0..12.0), kappa: rng.gen_range(0.2..5.0), gamma: rng.gen_range(0.0..3.0) }
}

fn unitarity(faults: Faults) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut sets = vec![ModeRates { g: 32.0 / 4.2, kappa: 1.0, gamma: 2.6 / 4.2 }];
    sets.extend((0..20).map(|_| random_params(&mut rng)));
    let mut worst = 0.0f64;
    for rates in &sets {
        for branch in [AtomBranch::Coupled, AtomBranch::Decoupled] {
            for i in 0..=400 {
                let omega = rates.kappa * (-5.0 + 0.025 * i as f64);
                let mut s = mode_response(*rates, branch, omega);
                if faults.reflection_sign && branch == AtomBranch::Coupled {
                    // R = (i w d + g^2)/D becomes (i w d - g^2)/D.
                    let d = c(-rates.gamma / 2.0, omega);
                    let denom = c(rates.kappa, -omega) * d - rates.g * rates.g;
                    s.r -= 2.0 * rates.g * rates.g / denom;
                }
                worst = worst.max(s.unitarity_residual().abs());
            }
        }
    }
    ensure(worst <= 1e-12, format!("max ||R|^2+|T|^2+|m|^2-1| = {worst:.3e} over {} parameter sets", sets.len()))
}

fn branch_limits(_: Faults) -> Result<String, String> {
    let rates = ModeRates { g: 3.0, kappa: 1.0, gamma: 0.0 };
    let empty = mode_response(rates, AtomBranch::Decoupled, 0.0);
    let full = mode_response(rates, AtomBranch::Coupled, 0.0);
    let ok = (empty.t - 1.0).norm() <= 1e-15
        && empty.r.norm() <= 1e-15
        && empty.m == c(0.0, 0.0)
        && (full.r + 1.0).norm() <= 1e-15
        && full.t.norm() <= 1e-15
        && full.m.norm() <= 1e-15;
    ensure(ok, format!("decoupled (R, T) = ({}, {}); coupled gamma = 0 (R, T) = ({}, {})", empty.r, empty.t, full.r, full.t))
}

fn atomic_preset(_: Faults) -> Result<String, String> {
    let params = Preset::atomic().params().map_err(|e| e.to_string())?.in_kappa_units();
    let ov = core(overlaps(&params, &core(PulseSpec::new(0.1))?, &QuadratureConfig::default()))?;
    let m = core(metrics(&ov))?;
    let ok = (0.012..=0.014).contains(&m.p) && (0.9970..=0.9980).contains(&m.fidelity);
    ensure(ok, format!("p = {:.6}, F = {:.6}", m.p, m.fidelity))
}

fn quadrature_convergence(_: Faults) -> Result<String, String> {
    let params = core(CavityParams::symmetric(6.0, 1.0, 1.0))?;
    let pulse = core(PulseSpec::new(0.2))?;
    let a = core(metrics(&core(overlaps(&params, &pulse, &QuadratureConfig::gauss_hermite(64)))?))?;
    let b = core(metrics(&core(overlaps(&params, &pulse, &QuadratureConfig::gauss_hermite(128)))?))?;
    let diff = (a.p - b.p).abs().max((a.fidelity - b.fidelity).abs());
    ensure(diff <= 1e-10, format!("64 vs 128 nodes differ by {diff:.3e}"))
}

fn channel_density(_: Faults) -> Result<String, String> {
    let params = Preset::atomic().params().map_err(|e| e.to_string())?.in_kappa_units();
    let model = core(build_model(&params, &core(PulseSpec::new(0.1))?, &QuadratureConfig::default()))?;
    let out = core(apply_noisy_cswap_typical(&model))?;
    core(out.validate())?;
    Ok(format!("trace = {:.12}, Hermitian and positive semidefinite", out.trace().re))
}

fn closed_form_match(_: Faults) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 1);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let h = random_params(&mut rng);
        let v = random_params(&mut rng);
        let params = core(CavityParams::new(h, v))?;
        let pulse = core(PulseSpec::new(rng.gen_range(0.01..0.5)))?;
        let quad = QuadratureConfig::default();
        let m = core(metrics(&core(overlaps(&params, &pulse, &quad))?))?;
        let out = core(apply_noisy_cswap_typical(&core(build_model(&params, &pulse, &quad))?))?;
        let p = core(loss_probability(&out))?;
        let f = core(fidelity(&out))?;
        worst = worst.max((p - m.p).abs()).max((f - m.fidelity).abs());
    }
    ensure(worst <= 1e-9, format!("max channel vs closed-form difference = {worst:.3e}"))
}
