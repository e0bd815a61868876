//! One function per subcommand. Each returns the text destined for stdout and
//! an exit code; files are written directly.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, ValueEnum};
use fredkin_core::pulse::sweep_symmetric;
use fredkin_core::statevector::{controlled_zz_target, cpf_target, sample_branch, swap_test_branches};
use fredkin_core::{
    overlaps, metrics, response, synthesize, AtomBranch, CavityParams, Polarization, PulseSpec, PureState,
    QuadratureConfig, SingleQubitGate, SynthesisRequest, SynthesisTarget,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::format::{plot_script, sci, write_file, RunReport, Table};
use crate::presets::{Bandwidth, Preset, RateUnit};
use crate::{exit, CliError, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Plain,
    Json,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    /// Built-in preset: atomic or solid-state.
    #[arg(long)]
    pub preset: Option<String>,
    /// JSON preset file with fields name, g, kappa, gamma, unit, bandwidth_rule.
    #[arg(long, conflicts_with = "preset")]
    pub preset_file: Option<PathBuf>,
    /// Atom-cavity coupling (overrides the preset).
    #[arg(long, allow_negative_numbers = true)]
    pub g: Option<f64>,
    /// Per-mirror cavity decay rate (overrides the preset; default 1).
    #[arg(long, allow_negative_numbers = true)]
    pub kappa: Option<f64>,
    /// Spontaneous emission rate (overrides the preset).
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
}

impl ParamArgs {
    pub fn resolve(&self) -> Result<Preset, CliError> {
        let mut preset = match (&self.preset, &self.preset_file) {
            (Some(name), _) => Preset::builtin(name)?,
            (None, Some(path)) => Preset::from_file(path)?,
            (None, None) => {
                let g = self
                    .g
                    .ok_or_else(|| CliError::Usage("give --preset, --preset-file, or --g".into()))?;
                Preset {
                    name: "custom".into(),
                    g: crate::presets::Rate::Both(g),
                    kappa: crate::presets::Rate::Both(1.0),
                    gamma: crate::presets::Rate::Both(0.0),
                    unit: RateUnit::Kappa,
                    bandwidth_rule: "0.1kappa".into(),
                }
            }
        };
        if let Some(g) = self.g {
            preset.g = crate::presets::Rate::Both(g);
        }
        if let Some(k) = self.kappa {
            preset.kappa = crate::presets::Rate::Both(k);
        }
        if let Some(x) = self.gamma {
            preset.gamma = crate::presets::Rate::Both(x);
        }
        preset.params()?;
        Ok(preset)
    }
}

fn params_json(name: &str, params: &CavityParams) -> serde_json::Value {
    let k = params.in_kappa_units();
    json!({
        "preset": name,
        "g_over_kappa": k.g_h,
        "gamma_over_kappa": k.gamma_h,
        "g_v_over_kappa": k.g_v,
        "kappa_v_over_kappa": k.kappa_v,
        "gamma_v_over_kappa": k.gamma_v,
    })
}

// ---------------------------------------------------------------- coeffs

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BranchArg {
    Coupled,
    Decoupled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolArg {
    H,
    V,
}

#[derive(Debug, Clone, Args)]
pub struct CoeffsArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, value_enum, default_value = "coupled")]
    pub branch: BranchArg,
    #[arg(long, value_enum, default_value = "h")]
    pub pol: PolArg,
    /// First detuning, in units of kappa_h.
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub omega_start: f64,
    /// Last detuning (inclusive), in units of kappa_h.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub omega_stop: f64,
    #[arg(long, default_value_t = 0.01)]
    pub omega_step: f64,
    #[arg(long)]
    pub out: PathBuf,
}

pub const COEFFS_HEADER: [&str; 8] = ["omega", "re_R", "im_R", "re_T", "im_T", "re_m", "im_m", "unitarity_residual"];

/// Inclusive grid `start, start + step, ...` up to `stop`.
pub fn grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) || !(start < stop) || !(step > 0.0) {
        return Err(CliError::Usage(format!(
            "range needs start < stop and step > 0 (got {start}, {stop}, {step})"
        )));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| start + step * i as f64).collect())
}

pub fn coeffs_table(params: &CavityParams, pol: Polarization, branch: AtomBranch, omegas: &[f64]) -> Result<Table, CliError> {
    let k = params.in_kappa_units();
    let mut table = Table::new(COEFFS_HEADER.to_vec());
    for &w in omegas {
        let s = response(&k, pol, branch, w)?;
        table.rows.push(vec![w, s.r.re, s.r.im, s.t.re, s.t.im, s.m.re, s.m.im, s.unitarity_residual()]);
    }
    Ok(table)
}

pub fn coeffs(args: &CoeffsArgs) -> Result<Outcome, CliError> {
    let preset = args.params.resolve()?;
    let params = preset.params()?;
    let omegas = grid(args.omega_start, args.omega_stop, args.omega_step)?;
    let pol = match args.pol {
        PolArg::H => Polarization::H,
        PolArg::V => Polarization::V,
    };
    let branch = match args.branch {
        BranchArg::Coupled => AtomBranch::Coupled,
        BranchArg::Decoupled => AtomBranch::Decoupled,
    };
    let table = coeffs_table(&params, pol, branch, &omegas)?;
    table.write(&args.out)?;
    let worst = table.rows.iter().map(|r| r[7].abs()).fold(0.0, f64::max);
    Ok(Outcome::ok(format!(
        "wrote {} rows to {}\nmax |unitarity residual| = {}\n",
        table.rows.len(),
        args.out.display(),
        sci(worst)
    )))
}

// ---------------------------------------------------------------- metrics

#[derive(Debug, Clone, Args)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Pulse bandwidth: `0.1kappa`, `0.1g2k` (times g^2/kappa), or an absolute value.
    #[arg(long)]
    pub bandwidth: Option<String>,
    #[arg(long, value_enum, default_value = "plain")]
    pub format: OutputFormat,
    /// Gauss-Hermite node count.
    #[arg(long, default_value_t = fredkin_core::quadrature::DEFAULT_HERMITE_NODES)]
    pub nodes: usize,
    /// Record wall time in the report.
    #[arg(long)]
    pub timing: bool,
}

pub fn metrics_cmd(args: &MetricsArgs) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let preset = args.params.resolve()?;
    let params = preset.params()?;
    let bandwidth = match &args.bandwidth {
        Some(text) => Bandwidth::parse(text)?,
        None => preset.default_bandwidth()?,
    };
    let dw = bandwidth.resolve(&params) / params.kappa_h;
    let k = params.in_kappa_units();
    let quad = QuadratureConfig::gauss_hermite(args.nodes);
    let ov = overlaps(&k, &PulseSpec::new(dw)?, &quad)?;
    let m = metrics(&ov)?;
    let report = RunReport {
        command: "metrics",
        inputs: json!({
            "parameters": params_json(&preset.name, &params),
            "bandwidth_over_kappa": dw,
            "quadrature": quad,
        }),
        outputs: json!({
            "p": m.p,
            "F": m.fidelity,
            "r_h0": ov.r_h0, "r_v0": ov.r_v0, "t_h1": ov.t_h1, "t_v1": ov.t_v1,
        }),
        quadrature_residual: Some(ov.quadrature_residual),
        seed: None,
        wall_time_s: args.timing.then(|| start.elapsed().as_secs_f64()),
    };
    let text = match args.format {
        OutputFormat::Json => report.to_json(),
        OutputFormat::Plain => {
            let mut s = format!(
                "parameters: {} (g/kappa = {}, gamma/kappa = {}, bandwidth/kappa = {})\np = {}\nF = {}\nquadrature residual = {}\n",
                preset.name,
                sci(k.g_h),
                sci(k.gamma_h),
                sci(dw),
                sci(m.p),
                sci(m.fidelity),
                sci(ov.quadrature_residual)
            );
            if let Some(t) = report.wall_time_s {
                s.push_str(&format!("wall time = {t:.3} s\n"));
            }
            s
        }
    };
    Ok(Outcome::ok(text))
}

// ---------------------------------------------------------------- sweep

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    Bandwidth,
    Coupling,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub axis: Axis,
    /// Axis values in units of kappa: comma list or `start:stop:step`.
    /// Defaults: 0.01:0.3:0.01 (bandwidth), 0.5:10:0.25 (coupling).
    #[arg(long)]
    pub values: Option<String>,
    /// Coupling families g/kappa for the bandwidth axis.
    #[arg(long, default_value = "3,6,10")]
    pub g: String,
    /// Bandwidth families dw/kappa for the coupling axis.
    #[arg(long, default_value = "0.05,0.1")]
    pub bandwidth: String,
    /// gamma/kappa for every point.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = fredkin_core::quadrature::DEFAULT_HERMITE_NODES)]
    pub nodes: usize,
    #[arg(long)]
    pub out: PathBuf,
}

pub const SWEEP_HEADER: [&str; 4] = ["g_over_kappa", "dw_over_kappa", "p", "F"];

/// Comma list or inclusive `start:stop:step` range.
pub fn parse_values(text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || CliError::Usage(format!("cannot parse values {text:?}"));
    let values = if parts.len() == 3 {
        let nums: Vec<f64> = parts.iter().map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
        grid(nums[0], nums[1], nums[2])?
    } else if parts.len() == 1 {
        text.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?
    } else {
        return Err(bad());
    };
    if values.is_empty() || values.iter().any(|v: &f64| !(v.is_finite() && *v > 0.0)) {
        return Err(CliError::Usage(format!("values must be positive and finite: {text:?}")));
    }
    Ok(values)
}

pub fn sweep_table(gs: &[f64], dws: &[f64], gamma: f64, quad: &QuadratureConfig) -> Result<(Table, Vec<String>), CliError> {
    let rows = sweep_symmetric(gs, dws, gamma, quad)?;
    let mut table = Table::new(SWEEP_HEADER.to_vec());
    let mut failures = Vec::new();
    for row in rows {
        let (p, f) = match &row.result {
            Ok(m) => (m.p, m.fidelity),
            Err(e) => {
                failures.push(format!("g/kappa = {}, dw/kappa = {}: {e}", row.g_over_kappa, row.dw_over_kappa));
                (f64::NAN, f64::NAN)
            }
        };
        table.rows.push(vec![row.g_over_kappa, row.dw_over_kappa, p, f]);
    }
    Ok((table, failures))
}

pub fn sweep_cmd(args: &SweepArgs) -> Result<Outcome, CliError> {
    let (gs, dws, x_col, family_col) = match args.axis {
        Axis::Bandwidth => (
            parse_values(&args.g)?,
            parse_values(args.values.as_deref().unwrap_or("0.01:0.3:0.01"))?,
            "dw_over_kappa",
            "g_over_kappa",
        ),
        Axis::Coupling => (
            parse_values(args.values.as_deref().unwrap_or("0.5:10:0.25"))?,
            parse_values(&args.bandwidth)?,
            "g_over_kappa",
            "dw_over_kappa",
        ),
    };
    if !(args.gamma.is_finite() && args.gamma >= 0.0) {
        return Err(CliError::Usage(format!("gamma must be non-negative, got {}", args.gamma)));
    }
    let (table, failures) = sweep_table(&gs, &dws, args.gamma, &QuadratureConfig::gauss_hermite(args.nodes))?;
    table.write(&args.out)?;
    let script = plot_path(&args.out);
    let csv_name = args.out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    write_file(&script, &plot_script(&csv_name, x_col, family_col))?;
    let mut text = format!(
        "wrote {} rows to {}\nplot script: {}\n",
        table.rows.len(),
        args.out.display(),
        script.display()
    );
    for f in &failures {
        text.push_str(&format!("failed point: {f}\n"));
    }
    Ok(Outcome::ok(text))
}

/// `<stem>.plot.py` next to the CSV.
pub fn plot_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "sweep".into());
    csv.with_file_name(format!("{stem}.plot.py"))
}

// ---------------------------------------------------------------- fingerprint

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StateChoice {
    /// Two independent random states.
    Random,
    /// The same random state twice.
    Identical,
    /// `|0...0>` against `|1...1>`.
    Orthogonal,
}

#[derive(Debug, Clone, Args)]
pub struct FingerprintArgs {
    /// Qubits per register.
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "random")]
    pub states: StateChoice,
    /// Explicit first state as h/v letters (overrides --states).
    #[arg(long, requires = "phi")]
    pub psi: Option<String>,
    #[arg(long, requires = "psi")]
    pub phi: Option<String>,
    #[arg(long, value_enum, default_value = "plain")]
    pub format: OutputFormat,
}

pub const MAX_FINGERPRINT_QUBITS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FingerprintResult {
    pub p_minus_exact: f64,
    pub p_minus_empirical: f64,
    pub minus_count: u64,
    pub overlap_recovered: f64,
    pub overlap_exact: f64,
    pub standard_error: f64,
}

pub fn fingerprint_run(psi: &PureState, phi: &PureState, trials: u64, rng: &mut ChaCha8Rng) -> Result<FingerprintResult, CliError> {
    if trials == 0 {
        return Err(CliError::Usage("trials must be at least 1".into()));
    }
    let branches = swap_test_branches(psi, phi)?;
    let p = branches.iter().filter(|b| b.bits[0]).map(|b| b.probability).sum::<f64>();
    let minus_count = (0..trials).filter(|_| branches[sample_branch(&branches, rng)].bits[0]).count() as u64;
    Ok(FingerprintResult {
        p_minus_exact: p,
        p_minus_empirical: minus_count as f64 / trials as f64,
        minus_count,
        overlap_recovered: (1.0 - 2.0 * p).max(0.0).sqrt(),
        overlap_exact: psi.inner(phi)?.norm(),
        standard_error: (p * (1.0 - p) / trials as f64).sqrt(),
    })
}

pub fn fingerprint(args: &FingerprintArgs) -> Result<Outcome, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let (psi, phi, label) = match (&args.psi, &args.phi) {
        (Some(a), Some(b)) => (PureState::from_polarizations(a)?, PureState::from_polarizations(b)?, "explicit"),
        _ => {
            let n = args.n;
            if n == 0 {
                return Err(CliError::Usage("n must be at least 1".into()));
            }
            if n > MAX_FINGERPRINT_QUBITS {
                return Err(fredkin_core::Error::Resource {
                    message: format!("fingerprint registers limited to {MAX_FINGERPRINT_QUBITS} qubits"),
                    size: n as u128,
                }
                .into());
            }
            match args.states {
                StateChoice::Random => {
                    let a = PureState::random(n, &mut rng)?;
                    let b = PureState::random(n, &mut rng)?;
                    (a, b, "random")
                }
                StateChoice::Identical => {
                    let a = PureState::random(n, &mut rng)?;
                    (a.clone(), a, "identical")
                }
                StateChoice::Orthogonal => (PureState::basis(n, 0)?, PureState::basis(n, (1 << n) - 1)?, "orthogonal"),
            }
        }
    };
    if psi.num_wires() > MAX_FINGERPRINT_QUBITS {
        return Err(fredkin_core::Error::Resource {
            message: format!("fingerprint registers limited to {MAX_FINGERPRINT_QUBITS} qubits"),
            size: psi.num_wires() as u128,
        }
        .into());
    }
    let result = fingerprint_run(&psi, &phi, args.trials, &mut rng)?;
    let report = RunReport {
        command: "fingerprint",
        inputs: json!({ "n": psi.num_wires(), "trials": args.trials, "states": label }),
        outputs: serde_json::to_value(result).expect("plain struct"),
        quadrature_residual: None,
        seed: Some(args.seed),
        wall_time_s: None,
    };
    let text = match args.format {
        OutputFormat::Json => report.to_json(),
        OutputFormat::Plain => format!(
            "states: {label}, n = {}, trials = {}, seed = {}\np_minus exact = {}\np_minus empirical = {} ({} of {})\nstandard error = {}\n|<psi|phi>| recovered = {}\n|<psi|phi>| exact = {}\n",
            psi.num_wires(),
            args.trials,
            args.seed,
            sci(result.p_minus_exact),
            sci(result.p_minus_empirical),
            result.minus_count,
            args.trials,
            sci(result.standard_error),
            sci(result.overlap_recovered),
            sci(result.overlap_exact),
        ),
    };
    Ok(Outcome::ok(text))
}

// ---------------------------------------------------------------- synthesize

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    /// Controlled phase flip on the photons, e^{i pi |hv><hv|}.
    Cpf,
    /// Z (x) Z on the photons, controlled by the atom.
    Czz,
}

#[derive(Debug, Clone, Args)]
pub struct SynthesizeArgs {
    #[arg(long, value_enum)]
    pub target: TargetArg,
    #[arg(long, default_value_t = 2)]
    pub cswaps: usize,
    /// Single-qubit gates allowed on the photons (and the atom unless --atom-gates).
    #[arg(long, default_value = "I,Z,S,Sdag,H")]
    pub gates: String,
    #[arg(long)]
    pub atom_gates: Option<String>,
    /// Allow an atom measurement with Z corrections on outcome 1.
    #[arg(long)]
    pub feedforward: bool,
    /// Seconds before the search stops with partial results.
    #[arg(long, default_value_t = 60.0)]
    pub time_budget: f64,
    #[arg(long, value_enum, default_value = "plain")]
    pub format: OutputFormat,
}

pub fn parse_gates(text: &str) -> Result<Vec<SingleQubitGate>, CliError> {
    text.split(',').map(|g| SingleQubitGate::parse(g).map_err(CliError::from)).collect()
}

pub fn synthesize_cmd(args: &SynthesizeArgs) -> Result<(Outcome, f64), CliError> {
    let start = Instant::now();
    if !(args.time_budget.is_finite() && args.time_budget > 0.0) {
        return Err(CliError::Usage("time budget must be positive".into()));
    }
    let gates = parse_gates(&args.gates)?;
    let atom_gates = match &args.atom_gates {
        Some(t) => parse_gates(t)?,
        None => gates.clone(),
    };
    let target = match args.target {
        TargetArg::Cpf => SynthesisTarget::PhotonGate(cpf_target()),
        TargetArg::Czz => SynthesisTarget::Unitary(controlled_zz_target()),
    };
    let request = SynthesisRequest::new(target, args.cswaps, gates)
        .with_atom_gates(atom_gates)
        .with_feedforward(args.feedforward)
        .with_deadline(Some(start + std::time::Duration::from_secs_f64(args.time_budget)));
    let report = synthesize(&request)?;
    let circuits: Vec<String> = report.circuits.iter().map(|c| c.to_string()).collect();
    let code = if report.truncated { exit::TRUNCATED } else { exit::SUCCESS };
    let text = match args.format {
        OutputFormat::Json => RunReport {
            command: "synthesize",
            inputs: json!({
                "target": format!("{:?}", args.target).to_lowercase(),
                "cswaps": args.cswaps,
                "gates": args.gates,
                "atom_gates": args.atom_gates.clone().unwrap_or_else(|| args.gates.clone()),
                "feedforward": args.feedforward,
            }),
            outputs: json!({
                "search_space": report.search_space.to_string(),
                "evaluated": report.evaluated,
                "truncated": report.truncated,
                "circuits": circuits,
            }),
            quadrature_residual: None,
            seed: None,
            wall_time_s: None,
        }
        .to_json(),
        OutputFormat::Plain => {
            let mut s = format!("search space: {}\nfound: {}\n", report.search_space, circuits.len());
            for c in &circuits {
                s.push_str(c);
                s.push('\n');
            }
            if report.truncated {
                s.push_str(&format!(
                    "TRUNCATED: time budget exhausted after {} of {} candidates\n",
                    report.evaluated, report.search_space
                ));
            }
            s
        }
    };
    Ok((Outcome { stdout: text, code }, start.elapsed().as_secs_f64()))
}
