//! Dense pure-state simulation of the atom + photon register.
//!
//! Basis indices are big-endian in wire order: wire 0 is the most significant
//! bit. Photon polarizations map `h -> 0`, `v -> 1`. By convention wire 0 is
//! the atom whenever one is present.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

pub const MAX_WIRES: usize = 24;
const NORM_TOLERANCE: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
    labels: Vec<String>,
}

fn check_wire_count(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("a register needs at least one wire"));
    }
    if n > MAX_WIRES {
        return Err(Error::Resource {
            message: format!("register limited to {MAX_WIRES} wires"),
            size: n as u128,
        });
    }
    Ok(())
}

fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|w| format!("q{w}")).collect()
}

impl PureState {
    /// `|0...0>` on `n` wires.
    pub fn zero(n: usize) -> Result<Self> {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, index: usize) -> Result<Self> {
        check_wire_count(n)?;
        if index >= 1 << n {
            return Err(Error::domain(format!("basis index {index} out of range for {n} wires")));
        }
        let mut amplitudes = vec![ZERO; 1 << n];
        amplitudes[index] = ONE;
        Ok(PureState { amplitudes, labels: default_labels(n) })
    }

    /// Basis state from polarization letters, e.g. `"hv"`; `0`/`1` are
    /// accepted as well.
    pub fn from_polarizations(spec: &str) -> Result<Self> {
        let mut index = 0usize;
        let mut n = 0usize;
        for c in spec.chars() {
            let bit = match c {
                'h' | 'H' | '0' => 0,
                'v' | 'V' | '1' => 1,
                other => return Err(Error::domain(format!("unknown basis symbol {other:?}"))),
            };
            index = (index << 1) | bit;
            n += 1;
        }
        Self::basis(n, index)
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::domain(format!("amplitude count {len} is not a power of two")));
        }
        let n = len.trailing_zeros() as usize;
        check_wire_count(n)?;
        let state = PureState { amplitudes, labels: default_labels(n) };
        let norm = state.norm();
        if !((norm - 1.0).abs() <= NORM_TOLERANCE) {
            return Err(Error::domain(format!("state norm is {norm}, expected 1")));
        }
        Ok(state)
    }

    /// Normalizes the input first; fails only for the zero vector.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::domain("cannot normalize a zero or non-finite vector"));
        }
        Self::from_amplitudes(amplitudes.into_iter().map(|a| a / norm).collect())
    }

    /// `(|0> + |1>)/sqrt(2)`.
    pub fn plus() -> Self {
        PureState {
            amplitudes: vec![Complex64::new(FRAC_1_SQRT_2, 0.0); 2],
            labels: default_labels(1),
        }
    }

    /// Haar-like random state from independent complex Gaussians.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        check_wire_count(n)?;
        let amps = (0..1usize << n)
            .map(|_| {
                // Box-Muller
                let u1: f64 = 1.0 - rng.gen::<f64>();
                let u2: f64 = rng.gen::<f64>();
                let r = (-2.0 * u1.ln()).sqrt();
                Complex64::from_polar(r, 2.0 * std::f64::consts::PI * u2)
            })
            .collect();
        Self::normalized(amps)
    }

    pub fn with_labels<S: Into<String>>(mut self, labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() != self.num_wires() {
            return Err(Error::domain(format!(
                "{} labels for {} wires",
                labels.len(),
                self.num_wires()
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    /// `self` on the leading wires, `other` after it.
    pub fn tensor(&self, other: &PureState) -> Result<Self> {
        check_wire_count(self.num_wires() + other.num_wires())?;
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|a| other.amplitudes.iter().map(move |b| a * b))
            .collect();
        let labels = self.labels.iter().chain(&other.labels).cloned().collect();
        Ok(PureState { amplitudes, labels })
    }

    pub fn num_wires(&self) -> usize {
        self.labels.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if self.amplitudes.len() != other.amplitudes.len() {
            return Err(Error::domain("inner product of registers with different sizes"));
        }
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn scaled(&self, phase: Complex64) -> PureState {
        PureState {
            amplitudes: self.amplitudes.iter().map(|a| a * phase).collect(),
            labels: self.labels.clone(),
        }
    }

    fn bit_mask(&self, wire: usize) -> usize {
        1 << (self.num_wires() - 1 - wire)
    }

    /// Purity of the reduced state of one wire.
    pub fn wire_purity(&self, wire: usize) -> Result<f64> {
        check_wires(self.num_wires(), &[wire])?;
        let mask = self.bit_mask(wire);
        let (mut r00, mut r11, mut r01) = (0.0, 0.0, ZERO);
        for (i, a) in self.amplitudes.iter().enumerate().filter(|(i, _)| i & mask == 0) {
            let b = self.amplitudes[i | mask];
            r00 += a.norm_sqr();
            r11 += b.norm_sqr();
            r01 += a * b.conj();
        }
        Ok(r00 * r00 + r11 * r11 + 2.0 * r01.norm_sqr())
    }
}

fn check_wires(n: usize, wires: &[usize]) -> Result<()> {
    for (k, &w) in wires.iter().enumerate() {
        if w >= n {
            return Err(Error::domain(format!("wire {w} out of range for {n} wires")));
        }
        if wires[..k].contains(&w) {
            return Err(Error::domain(format!("wire {w} used twice in one gate")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SingleQubitGate {
    I,
    H,
    X,
    Z,
    S,
    Sdag,
    /// `diag(1, e^{i theta})`.
    Phase(f64),
}

impl SingleQubitGate {
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        match self {
            SingleQubitGate::I => [[ONE, ZERO], [ZERO, ONE]],
            SingleQubitGate::H => [[h, h], [h, -h]],
            SingleQubitGate::X => [[ZERO, ONE], [ONE, ZERO]],
            SingleQubitGate::Z => [[ONE, ZERO], [ZERO, -ONE]],
            SingleQubitGate::S => [[ONE, ZERO], [ZERO, I]],
            SingleQubitGate::Sdag => [[ONE, ZERO], [ZERO, -I]],
            SingleQubitGate::Phase(theta) => [[ONE, ZERO], [ZERO, Complex64::from_polar(1.0, theta)]],
        }
    }

    pub fn is_diagonal(self) -> bool {
        !matches!(self, SingleQubitGate::H | SingleQubitGate::X)
    }

    pub fn name(self) -> String {
        match self {
            SingleQubitGate::I => "I".into(),
            SingleQubitGate::H => "H".into(),
            SingleQubitGate::X => "X".into(),
            SingleQubitGate::Z => "Z".into(),
            SingleQubitGate::S => "S".into(),
            SingleQubitGate::Sdag => "Sdag".into(),
            SingleQubitGate::Phase(t) => format!("P[{t}]"),
        }
    }

    /// Parses `I`, `H`, `X`, `Z`, `S`, `Sdag` (case-insensitive).
    pub fn parse(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "i" | "id" => Ok(SingleQubitGate::I),
            "h" => Ok(SingleQubitGate::H),
            "x" => Ok(SingleQubitGate::X),
            "z" => Ok(SingleQubitGate::Z),
            "s" => Ok(SingleQubitGate::S),
            "sdag" | "sdg" | "s†" => Ok(SingleQubitGate::Sdag),
            other => Err(Error::domain(format!("unknown gate {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Single { gate: SingleQubitGate, wire: usize },
    /// Swap `a` and `b` when `control` is `|1>`.
    Cswap { control: usize, a: usize, b: usize },
}

impl Gate {
    pub fn single(gate: SingleQubitGate, wire: usize) -> Self {
        Gate::Single { gate, wire }
    }

    pub fn cswap(control: usize, a: usize, b: usize) -> Self {
        Gate::Cswap { control, a, b }
    }

    fn wires(&self) -> Vec<usize> {
        match *self {
            Gate::Single { wire, .. } => vec![wire],
            Gate::Cswap { control, a, b } => vec![control, a, b],
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::Single { gate, wire } => write!(f, "{}({wire})", gate.name()),
            Gate::Cswap { control, a, b } => write!(f, "CSWAP({control};{a},{b})"),
        }
    }
}

pub(crate) fn apply_in_place(amps: &mut [Complex64], n: usize, gate: &Gate) {
    match *gate {
        Gate::Single { gate, wire } => {
            let [[a, b], [c, d]] = gate.matrix();
            let mask = 1usize << (n - 1 - wire);
            if gate.is_diagonal() {
                if a == ONE {
                    for (i, x) in amps.iter_mut().enumerate() {
                        if i & mask != 0 {
                            *x *= d;
                        }
                    }
                    return;
                }
            }
            for i in 0..amps.len() {
                if i & mask == 0 {
                    let (x0, x1) = (amps[i], amps[i | mask]);
                    amps[i] = a * x0 + b * x1;
                    amps[i | mask] = c * x0 + d * x1;
                }
            }
        }
        Gate::Cswap { control, a, b } => {
            let mc = 1usize << (n - 1 - control);
            let ma = 1usize << (n - 1 - a);
            let mb = 1usize << (n - 1 - b);
            for i in 0..amps.len() {
                // visit each swapped pair once, from its (a = 1, b = 0) member
                if i & mc != 0 && i & ma != 0 && i & mb == 0 {
                    amps.swap(i, i ^ ma ^ mb);
                }
            }
        }
    }
}

/// Apply one gate, returning the new state.
pub fn apply(state: &PureState, gate: &Gate) -> Result<PureState> {
    check_wires(state.num_wires(), &gate.wires())?;
    let mut out = state.clone();
    apply_in_place(&mut out.amplitudes, state.num_wires(), gate);
    Ok(out)
}

/// Register-level CSWAP: swaps the contents of `reg_a` and `reg_b` when
/// `control` is `|1>`.
pub fn cswap_multi(state: &PureState, control: usize, reg_a: &[usize], reg_b: &[usize]) -> Result<PureState> {
    if reg_a.len() != reg_b.len() {
        return Err(Error::domain(format!(
            "register lengths differ: {} vs {}",
            reg_a.len(),
            reg_b.len()
        )));
    }
    let all: Vec<usize> = std::iter::once(control).chain(reg_a.iter().copied()).chain(reg_b.iter().copied()).collect();
    check_wires(state.num_wires(), &all)?;
    let mut out = state.clone();
    for (&a, &b) in reg_a.iter().zip(reg_b) {
        apply_in_place(&mut out.amplitudes, state.num_wires(), &Gate::cswap(control, a, b));
    }
    Ok(out)
}

/// A step of a circuit with mid-circuit measurement and feed-forward.
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Gate(Gate),
    /// Measure `wire` in `{|0>, |1>}` and store the outcome in classical `bit`.
    Measure { wire: usize, bit: usize },
    /// Apply `gates` when classical `bit` equals `value`.
    Conditioned { bit: usize, value: bool, gates: Vec<Gate> },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    pub steps: Vec<Step>,
}

impl Circuit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn gate(mut self, gate: Gate) -> Self {
        self.steps.push(Step::Gate(gate));
        self
    }

    pub fn single(self, gate: SingleQubitGate, wire: usize) -> Self {
        self.gate(Gate::single(gate, wire))
    }

    pub fn cswap(self, control: usize, a: usize, b: usize) -> Self {
        self.gate(Gate::cswap(control, a, b))
    }

    pub fn measure(mut self, wire: usize, bit: usize) -> Self {
        self.steps.push(Step::Measure { wire, bit });
        self
    }

    pub fn conditioned(mut self, bit: usize, value: bool, gates: Vec<Gate>) -> Self {
        self.steps.push(Step::Conditioned { bit, value, gates });
        self
    }

    pub fn num_bits(&self) -> usize {
        self.steps
            .iter()
            .filter_map(|s| match s {
                Step::Measure { bit, .. } => Some(bit + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn cswap_count(&self) -> usize {
        self.steps.iter().filter(|s| matches!(s, Step::Gate(Gate::Cswap { .. }))).count()
    }

    /// Wire indices valid; every conditioned step reads a bit that has
    /// already been measured.
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut measured = vec![false; self.num_bits()];
        for step in &self.steps {
            match step {
                Step::Gate(g) => check_wires(n, &g.wires())?,
                Step::Measure { wire, bit } => {
                    check_wires(n, &[*wire])?;
                    measured[*bit] = true;
                }
                Step::Conditioned { bit, gates, .. } => {
                    if !measured.get(*bit).copied().unwrap_or(false) {
                        return Err(Error::domain(format!("classical bit {bit} read before it is measured")));
                    }
                    for g in gates {
                        check_wires(n, &g.wires())?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Unitary of a measurement-free circuit.
    pub fn unitary(&self, n: usize) -> Result<DMatrix<Complex64>> {
        self.validate(n)?;
        let gates = self
            .steps
            .iter()
            .map(|s| match s {
                Step::Gate(g) => Ok(*g),
                _ => Err(Error::domain("circuit with measurements has no unitary")),
            })
            .collect::<Result<Vec<_>>>()?;
        check_wire_count(n)?;
        let dim = 1usize << n;
        let mut u = DMatrix::zeros(dim, dim);
        let mut col = vec![ZERO; dim];
        for j in 0..dim {
            col.fill(ZERO);
            col[j] = ONE;
            for g in &gates {
                apply_in_place(&mut col, n, g);
            }
            u.set_column(j, &nalgebra::DVector::from_column_slice(&col));
        }
        Ok(u)
    }
}

impl fmt::Display for Circuit {
    /// Canonical text form: steps separated by `; `.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for step in &self.steps {
            if !first {
                f.write_str("; ")?;
            }
            first = false;
            match step {
                Step::Gate(g) => write!(f, "{g}")?,
                Step::Measure { wire, bit } => write!(f, "M({wire}->c{bit})")?,
                Step::Conditioned { bit, value, gates } => {
                    write!(f, "if c{bit}={} {{ ", u8::from(*value))?;
                    for (k, g) in gates.iter().enumerate() {
                        if k > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{g}")?;
                    }
                    f.write_str(" }")?;
                }
            }
        }
        if first {
            f.write_str("(empty)")?;
        }
        Ok(())
    }
}

/// One measurement history of a circuit run.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchOutcome {
    pub bits: Vec<bool>,
    pub probability: f64,
    pub post_state: PureState,
}

/// Unnormalized branch: amplitudes carry `sqrt(probability)`.
#[derive(Debug, Clone)]
pub(crate) struct RawBranch {
    pub bits: Vec<bool>,
    pub amplitudes: Vec<Complex64>,
}

pub(crate) fn run_raw(circuit: &Circuit, n: usize, input: Vec<Complex64>) -> Vec<RawBranch> {
    let mut branches = vec![RawBranch { bits: vec![false; circuit.num_bits()], amplitudes: input }];
    for step in &circuit.steps {
        match step {
            Step::Gate(g) => {
                for b in &mut branches {
                    apply_in_place(&mut b.amplitudes, n, g);
                }
            }
            Step::Measure { wire, bit } => {
                let mask = 1usize << (n - 1 - wire);
                branches = branches
                    .into_iter()
                    .flat_map(|b| {
                        [false, true].map(|outcome| {
                            let mut bits = b.bits.clone();
                            bits[*bit] = outcome;
                            let amplitudes = b
                                .amplitudes
                                .iter()
                                .enumerate()
                                .map(|(i, a)| if (i & mask != 0) == outcome { *a } else { ZERO })
                                .collect();
                            RawBranch { bits, amplitudes }
                        })
                    })
                    .collect();
            }
            Step::Conditioned { bit, value, gates } => {
                for b in branches.iter_mut().filter(|b| b.bits[*bit] == *value) {
                    for g in gates {
                        apply_in_place(&mut b.amplitudes, n, g);
                    }
                }
            }
        }
    }
    branches
}

/// Run `circuit` on `state`, keeping every measurement branch with non-zero
/// probability.
pub fn run(circuit: &Circuit, state: &PureState) -> Result<Vec<BranchOutcome>> {
    let n = state.num_wires();
    circuit.validate(n)?;
    Ok(run_raw(circuit, n, state.amplitudes.clone())
        .into_iter()
        .filter_map(|b| {
            let probability: f64 = b.amplitudes.iter().map(|a| a.norm_sqr()).sum();
            (probability > 0.0).then(|| {
                let scale = 1.0 / probability.sqrt();
                BranchOutcome {
                    bits: b.bits,
                    probability,
                    post_state: PureState {
                        amplitudes: b.amplitudes.into_iter().map(|a| a * scale).collect(),
                        labels: state.labels.clone(),
                    },
                }
            })
        })
        .collect())
}

/// Draw one branch index according to the branch probabilities.
pub fn sample_branch<R: Rng + ?Sized>(branches: &[BranchOutcome], rng: &mut R) -> usize {
    let x: f64 = rng.gen::<f64>() * branches.iter().map(|b| b.probability).sum::<f64>();
    let mut acc = 0.0;
    for (k, b) in branches.iter().enumerate() {
        acc += b.probability;
        if x < acc {
            return k;
        }
    }
    branches.len() - 1
}

/// The overlap-measurement circuit on `1 + 2n` wires: control on wire 0,
/// register A on wires `1..=n`, register B on `n+1..=2n`.
pub fn swap_test_circuit(n: usize) -> Circuit {
    let mut c = Circuit::new().single(SingleQubitGate::H, 0);
    for k in 1..=n {
        c = c.cswap(0, k, k + n);
    }
    c.single(SingleQubitGate::H, 0).measure(0, 0)
}

/// Branches of the overlap measurement; outcome bit `true` is the `|->`
/// result.
pub fn swap_test_branches(psi: &PureState, phi: &PureState) -> Result<Vec<BranchOutcome>> {
    if psi.num_wires() != phi.num_wires() {
        return Err(Error::domain(format!(
            "registers differ in size: {} vs {}",
            psi.num_wires(),
            phi.num_wires()
        )));
    }
    let n = psi.num_wires();
    check_wire_count(2 * n + 1)?;
    let input = PureState::zero(1)?.tensor(psi)?.tensor(phi)?;
    run(&swap_test_circuit(n), &input)
}

/// Probability of the `-` outcome of the overlap measurement.
pub fn swap_test(psi: &PureState, phi: &PureState) -> Result<f64> {
    Ok(swap_test_branches(psi, phi)?
        .iter()
        .filter(|b| b.bits[0])
        .map(|b| b.probability)
        .sum())
}

/// `e^{i pi |hv><hv|}` on two photons (basis order hh, hv, vh, vv).
pub fn cpf_target() -> DMatrix<Complex64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![ONE, -ONE, ONE, ONE]))
}

/// `Z (x) Z` on both photons controlled by the atom (wire 0).
pub fn controlled_zz_target() -> DMatrix<Complex64> {
    let d = [ONE, ONE, ONE, ONE, ONE, -ONE, -ONE, ONE];
    DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&d))
}

/// Two-CSWAP controlled phase flip with measurement feed-forward; atom on
/// wire 0, photons on wires 1 and 2. Expects the atom in `|+>`.
pub fn cpf_feedforward_circuit() -> Circuit {
    use SingleQubitGate::*;
    Circuit::new()
        .single(Z, 1)
        .cswap(0, 1, 2)
        .single(Z, 1)
        .cswap(0, 1, 2)
        .single(Sdag, 0)
        .single(Sdag, 1)
        .single(S, 2)
        .single(H, 0)
        .measure(0, 0)
        .conditioned(0, true, vec![Gate::single(Z, 1), Gate::single(Z, 2)])
}

/// Run the feed-forward CPF on a three-wire state (atom on wire 0). The atom
/// must be unentangled on entry; it is re-prepared in `|+>`.
pub fn cpf_feedforward(state: &PureState) -> Result<Vec<BranchOutcome>> {
    if state.num_wires() != 3 {
        return Err(Error::domain(format!("expected atom + 2 photons, got {} wires", state.num_wires())));
    }
    let purity = state.wire_purity(0)?;
    if (purity - 1.0).abs() > 1e-10 {
        return Err(Error::domain(format!(
            "atom is entangled with the photons on entry (purity {purity})"
        )));
    }
    // photon factor: the half of the state with the larger weight, normalized
    let (lo, hi) = state.amplitudes.split_at(4);
    let w_lo: f64 = lo.iter().map(|a| a.norm_sqr()).sum();
    let w_hi: f64 = hi.iter().map(|a| a.norm_sqr()).sum();
    let photons = PureState::normalized(if w_lo >= w_hi { lo.to_vec() } else { hi.to_vec() })?;
    cpf_feedforward_photons(&photons)
}

/// Run the feed-forward CPF on a two-photon state.
pub fn cpf_feedforward_photons(photons: &PureState) -> Result<Vec<BranchOutcome>> {
    if photons.num_wires() != 2 {
        return Err(Error::domain(format!("expected 2 photon wires, got {}", photons.num_wires())));
    }
    let input = PureState::plus()
        .tensor(photons)?
        .with_labels(["atom", photons.labels[0].as_str(), photons.labels[1].as_str()])?;
    run(&cpf_feedforward_circuit(), &input)
}

/// Photon map of each measurement branch when the atom (wire 0) starts in
/// `|+>` and is measured: `B_k = <k|_atom U (|+> (x) I)`, including the
/// conditioned corrections.
pub fn ancilla_branch_operators(circuit: &Circuit) -> Result<Vec<(Vec<bool>, DMatrix<Complex64>)>> {
    circuit.validate(3)?;
    let atom_bit = circuit
        .steps
        .iter()
        .rev()
        .find_map(|s| match s {
            Step::Measure { wire: 0, bit } => Some(*bit),
            _ => None,
        })
        .ok_or_else(|| Error::domain("circuit never measures the atom"))?;
    let mut out: Vec<(Vec<bool>, DMatrix<Complex64>)> = Vec::new();
    for j in 0..4 {
        let mut input = vec![ZERO; 8];
        input[j] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        input[4 + j] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        for branch in run_raw(circuit, 3, input) {
            let idx = match out.iter().position(|(bits, _)| *bits == branch.bits) {
                Some(k) => k,
                None => {
                    out.push((branch.bits.clone(), DMatrix::zeros(4, 4)));
                    out.len() - 1
                }
            };
            let offset = if branch.bits[atom_bit] { 4 } else { 0 };
            for i in 0..4 {
                out[idx].1[(i, j)] += branch.amplitudes[offset + i];
            }
        }
    }
    Ok(out)
}
