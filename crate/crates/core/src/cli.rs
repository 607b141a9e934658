//! Command-line front end: `orbit`, `simulate`, `repsolve`, `verify`, `average`.
//!
//! Parameters come from a JSON config file (`--config`) and from flags, with
//! flags taking precedence. Reports are JSON with every float written to 17
//! significant digits; trajectories are CSV. Errors are reported on stdout as
//! `{"error": {"code": ..., "message": ...}}`.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::averaging::{averaging_report, AveragingReport, MCConfig, ParticlePoint};
use crate::bracket::{NCParams2D, PhaseState2D};
use crate::dynamics::{default_dt, integrate, reversal_experiment, reversal_experiment_flipping_params, KeplerSystem2D};
use crate::error::Error;
use crate::orbit::{circular_initial_conditions, solve_orbit, CircularOrbitSpec, Direction, OrbitReport, OrbitSolution};
use crate::representation::{
    induced_algebra, is_degenerate, mapped_brackets, solve_gamma_zero, solve_general, symmetric_reps_gamma_zero, Branch,
    CanonicalState2D, InducedAlgebra, RepParams,
};
use crate::rotinv::{verify_batch, TensorConfig, TensorKind, VerifyReport, VerifySettings};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_MEASUREMENT: i32 = 3;
pub const EXIT_TOLERANCE: i32 = 4;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "ncphase", version, about = "Noncommutative phase-space mechanics toolkit")]
pub struct Cli {
    /// JSON config file: {"command"?, "params"?, "out"?, "format"?, "seed"?}
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Write the primary output here instead of stdout
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Output format
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Seed for randomized commands
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Closed-form circular orbits in both directions
    Orbit(OrbitArgs),
    /// RK4 trajectory as CSV, with optional period and reversal sidecar
    Simulate(SimulateArgs),
    /// Canonical representations of a 2D algebra
    Repsolve(RepsolveArgs),
    /// Randomized verification of the invariant 3D algebra
    Verify(VerifyArgs),
    /// Ground-state averages and effective-Hamiltonian checks
    Average(AverageArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Orbit(_) => "orbit",
            Command::Simulate(_) => "simulate",
            Command::Repsolve(_) => "repsolve",
            Command::Verify(_) => "verify",
            Command::Average(_) => "average",
        }
    }
}

#[derive(Args, Debug, Default, Serialize)]
pub struct SystemArgs {
    /// Particle mass
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    /// Coupling in V = -k/|X|
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    /// {X1, X2}
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// {P1, P2}
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// {Xi, Pi} = 1 + gamma
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Circular orbit radius
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
}

#[derive(Args, Debug, Default, Serialize)]
pub struct OrbitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub system: SystemArgs,
}

#[derive(Args, Debug, Default, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub system: SystemArgs,
    /// Initial state: circular:ccw, circular:cw, or X1,X2,P1,P2
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<String>,
    /// Step size (default: closed-form period / 1e4)
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Number of steps (default: 12500, i.e. 1.25 periods at the default dt)
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<u64>,
    /// Measure the period and write it to the sidecar
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub measure_period: bool,
    /// Forward-flip-forward experiment: tau=T (one closed-form period) or tau=<number>
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reversal: Option<String>,
}

#[derive(Args, Debug, Default, Serialize)]
pub struct RepsolveArgs {
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// plus, minus or both
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branch: Option<BranchChoice>,
    /// Fix theta'_2 and solve the gamma = 0 system
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta2p: Option<f64>,
    /// Symmetric gamma = 0 representations (theta'_1 = theta'_2)
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub symmetric: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchChoice {
    Plus,
    Minus,
    #[default]
    Both,
}

#[derive(Args, Debug, Default, Serialize)]
pub struct TensorArgs {
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_theta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_eta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_osc: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_osc: Option<f64>,
}

#[derive(Args, Debug, Default, Serialize)]
pub struct VerifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub tensors: TensorArgs,
    /// Number of random draws
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub draws: Option<usize>,
    /// Use the position-built tensors (not time-reversal invariant)
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub alternative: bool,
    /// Draw couplings per sample
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub randomize: bool,
    /// Skip the extended-flow reversal experiment
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub no_reversal: bool,
}

#[derive(Args, Debug, Default, Serialize)]
pub struct AverageArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub tensors: TensorArgs,
    /// Monte Carlo sample count
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    /// Particle position x1,x2,x3
    #[arg(long, value_delimiter = ',', num_args = 3, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    /// Particle momentum p1,p2,p3
    #[arg(long, value_delimiter = ',', num_args = 3, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
}

/// Resolved `orbit` parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitParams {
    pub m: f64,
    pub k: f64,
    pub theta: f64,
    pub eta: f64,
    pub gamma: f64,
    pub r0: f64,
}

impl Default for OrbitParams {
    fn default() -> Self {
        Self { m: 1.0, k: 1.0, theta: 0.0, eta: 0.0, gamma: 0.0, r0: 1.0 }
    }
}

impl OrbitParams {
    pub fn system(&self) -> crate::Result<KeplerSystem2D> {
        KeplerSystem2D::new(self.m, self.k, NCParams2D::new(self.theta, self.eta, self.gamma))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateParams {
    pub m: f64,
    pub k: f64,
    pub theta: f64,
    pub eta: f64,
    pub gamma: f64,
    pub r0: f64,
    pub init: String,
    pub dt: Option<f64>,
    pub n_steps: Option<u64>,
    pub measure_period: bool,
    pub reversal: Option<String>,
}

impl Default for SimulateParams {
    fn default() -> Self {
        let o = OrbitParams::default();
        Self {
            m: o.m,
            k: o.k,
            theta: o.theta,
            eta: o.eta,
            gamma: o.gamma,
            r0: o.r0,
            init: "circular:ccw".into(),
            dt: None,
            n_steps: None,
            measure_period: false,
            reversal: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RepsolveParams {
    pub theta: f64,
    pub eta: f64,
    pub gamma: f64,
    pub branch: BranchChoice,
    pub theta2p: Option<f64>,
    pub symmetric: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyParams {
    pub c_theta: f64,
    pub c_eta: f64,
    pub l0: f64,
    pub p0: f64,
    pub m_osc: f64,
    pub omega_osc: f64,
    pub draws: usize,
    pub alternative: bool,
    pub randomize: bool,
    pub no_reversal: bool,
}

impl Default for VerifyParams {
    fn default() -> Self {
        let c = TensorConfig::default();
        Self {
            c_theta: c.c_theta,
            c_eta: c.c_eta,
            l0: c.l0,
            p0: c.p0,
            m_osc: c.m_osc,
            omega_osc: c.omega_osc,
            draws: 100,
            alternative: false,
            randomize: false,
            no_reversal: false,
        }
    }
}

impl VerifyParams {
    pub fn tensor_config(&self) -> TensorConfig {
        TensorConfig {
            c_theta: self.c_theta,
            c_eta: self.c_eta,
            l0: self.l0,
            p0: self.p0,
            m_osc: self.m_osc,
            omega_osc: self.omega_osc,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AverageParams {
    pub c_theta: f64,
    pub c_eta: f64,
    pub l0: f64,
    pub p0: f64,
    pub m_osc: f64,
    pub omega_osc: f64,
    pub n_samples: u64,
    pub m: f64,
    pub k: f64,
    pub x: [f64; 3],
    pub p: [f64; 3],
}

impl Default for AverageParams {
    fn default() -> Self {
        Self {
            c_theta: 0.01,
            c_eta: 0.01,
            l0: 1.0,
            p0: 1.0,
            m_osc: 1.0,
            omega_osc: 1.0,
            n_samples: 1_000_000,
            m: 1.0,
            k: 1.0,
            x: [1.0, 0.0, 0.0],
            p: [0.0, 1.0, 0.0],
        }
    }
}

impl AverageParams {
    pub fn tensor_config(&self) -> TensorConfig {
        TensorConfig {
            c_theta: self.c_theta,
            c_eta: self.c_eta,
            l0: self.l0,
            p0: self.p0,
            m_osc: self.m_osc,
            omega_osc: self.omega_osc,
        }
    }
}

/// Config file layout.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    #[serde(default)]
    pub params: Map<String, Value>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
}

/// Error carrying an exit code and a stable machine-readable code.
#[derive(Clone, Debug, PartialEq)]
pub struct CliError {
    pub exit: i32,
    pub code: String,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self { exit: EXIT_INPUT, code: "INVALID_INPUT".into(), message: message.into() }
    }

    fn io(path: &Path, e: io::Error) -> Self {
        Self { exit: EXIT_INPUT, code: "IO_ERROR".into(), message: format!("{}: {e}", path.display()) }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self { exit: EXIT_USAGE, code: "USAGE".into(), message: message.into() }
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({ "error": { "code": self.code, "message": self.message } })
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let exit = if e.is_measurement_failure() { EXIT_MEASUREMENT } else { EXIT_INPUT };
        Self { exit, code: e.code().into(), message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Overlays explicitly given flags on config-file params, then fills defaults.
pub fn resolve_params<A: Serialize, P: DeserializeOwned>(config: &Map<String, Value>, args: &A) -> CliResult<P> {
    let mut merged = config.clone();
    match serde_json::to_value(args).map_err(|e| CliError::input(e.to_string()))? {
        Value::Object(flags) => merged.extend(flags),
        other => return Err(CliError::input(format!("unexpected argument encoding {other}"))),
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::input(format!("invalid parameters: {e}")))
}

/// JSON formatter writing every float with 17 significant digits.
struct FixedDigits(serde_json::ser::PrettyFormatter<'static>);

impl serde_json::ser::Formatter for FixedDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Pretty JSON with 17-significant-digit floats and a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedDigits(serde_json::ser::PrettyFormatter::new()));
    value.serialize(&mut ser).expect("report types serialize infallibly");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON output is UTF-8")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitOutput {
    pub params: OrbitParams,
    pub ccw: OrbitSolution,
    pub cw: OrbitSolution,
    #[serde(flatten)]
    pub report: OrbitReport,
    /// `η/m + kθ/R0³`
    pub delta_omega_closed_form: f64,
    pub t_flip_consistent: bool,
}

pub fn cmd_orbit(p: &OrbitParams) -> crate::Result<OrbitOutput> {
    let sys = p.system()?;
    let solve = |direction| solve_orbit(&CircularOrbitSpec { sys, r0: p.r0, direction });
    let ccw = solve(Direction::Ccw)?;
    let cw = solve(Direction::Cw)?;
    Ok(OrbitOutput {
        params: *p,
        ccw,
        cw,
        report: OrbitReport::compute(&sys, p.r0)?,
        delta_omega_closed_form: p.eta / p.m + p.k * p.theta / p.r0.powi(3),
        t_flip_consistent: crate::orbit::t_reversal_frequency_check(&sys, p.r0)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PeriodSidecar {
    pub measured: f64,
    pub omega_measured: f64,
    pub closed_form: Option<f64>,
    pub relative_error: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReversalSidecar {
    pub tau: f64,
    pub dt: f64,
    /// Return leg with the same bracket parameters.
    pub distance: f64,
    /// Return leg with `(−θ, −η, γ)`.
    pub distance_flipping_params: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulateSidecar {
    pub dt: f64,
    pub n_steps: u64,
    pub max_relative_energy_drift: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<PeriodSidecar>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reversal: Option<ReversalSidecar>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulateOutput {
    pub trajectory: crate::dynamics::Trajectory,
    pub sidecar: SimulateSidecar,
}

/// Parses `circular:ccw`, `circular:cw` or `X1,X2,P1,P2`.
pub fn parse_init(sys: &KeplerSystem2D, r0: f64, init: &str) -> crate::Result<(PhaseState2D, Option<OrbitSolution>)> {
    let direction = match init.trim() {
        "circular:ccw" => Some(Direction::Ccw),
        "circular:cw" => Some(Direction::Cw),
        _ => None,
    };
    if let Some(direction) = direction {
        let spec = CircularOrbitSpec { sys: *sys, r0, direction };
        let sol = solve_orbit(&spec)?;
        return Ok((circular_initial_conditions(&sol, &spec), Some(sol)));
    }
    let values: Vec<f64> = init
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidInput(format!("cannot parse initial state {init:?}")))?;
    match values.as_slice() {
        [x1, x2, p1, p2] => Ok((PhaseState2D::new(*x1, *x2, *p1, *p2), None)),
        _ => Err(Error::InvalidInput(format!("initial state needs 4 components, got {}", values.len()))),
    }
}

/// `tau=T`, `tau=<number>` or `<number>`; `T` is the closed-form period.
pub fn parse_reversal(spec: &str, period: Option<f64>) -> crate::Result<f64> {
    let v = spec.trim();
    let v = v.strip_prefix("tau=").unwrap_or(v);
    if v == "T" {
        return period.ok_or_else(|| Error::InvalidInput("tau=T needs a circular initial state".into()));
    }
    v.parse::<f64>().map_err(|_| Error::InvalidInput(format!("cannot parse reversal horizon {spec:?}")))
}

pub fn cmd_simulate(p: &SimulateParams) -> crate::Result<SimulateOutput> {
    let sys = KeplerSystem2D::new(p.m, p.k, NCParams2D::new(p.theta, p.eta, p.gamma))?;
    let (s0, sol) = parse_init(&sys, p.r0, &p.init)?;
    let dt = p.dt.unwrap_or_else(|| sol.map(|s| s.period / 1e4).unwrap_or_else(|| default_dt(&sys, p.r0)));
    let n_steps = p.n_steps.unwrap_or(12_500);
    let trajectory = integrate(&sys, &s0, dt, n_steps)?;

    let period = if p.measure_period {
        let measured = crate::dynamics::measure_period(&trajectory)?;
        let closed_form = sol.map(|s| s.period);
        Some(PeriodSidecar {
            measured,
            omega_measured: std::f64::consts::TAU / measured,
            closed_form,
            relative_error: closed_form.map(|t| (measured - t).abs() / t),
        })
    } else {
        None
    };
    let reversal = match &p.reversal {
        Some(spec) => {
            let tau = parse_reversal(spec, sol.map(|s| s.period))?;
            Some(ReversalSidecar {
                tau,
                dt,
                distance: reversal_experiment(&sys, &s0, tau, dt)?,
                distance_flipping_params: reversal_experiment_flipping_params(&sys, &s0, tau, dt)?,
            })
        }
        None => None,
    };
    let sidecar = SimulateSidecar {
        dt,
        n_steps,
        max_relative_energy_drift: trajectory.max_relative_energy_drift(),
        period,
        reversal,
    };
    Ok(SimulateOutput { trajectory, sidecar })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RepSolution {
    pub branch: Option<Branch>,
    pub params: RepParams,
    pub induced: InducedAlgebra,
    /// `max |induced − (θ, η, γ, γ)|`
    pub algebra_residual: f64,
    /// Same check with brackets computed by differentiating the map.
    pub bracket_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RepsolveOutput {
    pub theta: f64,
    pub eta: f64,
    pub gamma: f64,
    pub mode: &'static str,
    pub degenerate: bool,
    pub solutions: Vec<RepSolution>,
}

fn rep_solution(branch: Option<Branch>, rp: RepParams, theta: f64, eta: f64, gamma: f64) -> crate::Result<RepSolution> {
    let induced = induced_algebra(&rp);
    let (mapped, off) = mapped_brackets(&rp, &CanonicalState2D::new(0.7, -0.4, 0.3, 1.1))?;
    Ok(RepSolution {
        branch,
        params: rp,
        induced,
        algebra_residual: induced.residual(theta, eta, gamma),
        bracket_residual: mapped.residual(theta, eta, gamma).max(off),
    })
}

pub fn cmd_repsolve(p: &RepsolveParams) -> crate::Result<RepsolveOutput> {
    let (theta, eta, gamma) = (p.theta, p.eta, p.gamma);
    let branches: &[Branch] = match p.branch {
        BranchChoice::Plus => &[Branch::Plus],
        BranchChoice::Minus => &[Branch::Minus],
        BranchChoice::Both => &[Branch::Plus, Branch::Minus],
    };
    if p.theta2p.is_some() || p.symmetric {
        if gamma != 0.0 {
            return Err(Error::InvalidInput("theta2p and symmetric modes require gamma = 0".into()));
        }
        if let Some(t2) = p.theta2p {
            let rp = solve_gamma_zero(theta, eta, t2)?;
            return Ok(RepsolveOutput {
                theta,
                eta,
                gamma,
                mode: "gamma_zero",
                degenerate: false,
                solutions: vec![rep_solution(None, rp, theta, eta, 0.0)?],
            });
        }
        let solutions = branches
            .iter()
            .map(|b| rep_solution(Some(*b), symmetric_reps_gamma_zero(theta, eta, *b)?, theta, eta, 0.0))
            .collect::<crate::Result<_>>()?;
        return Ok(RepsolveOutput { theta, eta, gamma, mode: "symmetric", degenerate: false, solutions });
    }
    let degenerate = is_degenerate(theta, eta, gamma)?;
    let branches = if degenerate { &branches[..1] } else { branches };
    let solutions = branches
        .iter()
        .map(|b| rep_solution(if degenerate { None } else { Some(*b) }, solve_general(theta, eta, gamma, *b)?, theta, eta, gamma))
        .collect::<crate::Result<_>>()?;
    Ok(RepsolveOutput { theta, eta, gamma, mode: "general", degenerate, solutions })
}

pub fn cmd_verify(p: &VerifyParams, seed: u64) -> crate::Result<VerifyReport> {
    verify_batch(&VerifySettings {
        cfg: p.tensor_config(),
        kind: if p.alternative { TensorKind::Position } else { TensorKind::Momentum },
        draws: p.draws,
        seed,
        randomize_config: p.randomize,
        reversal: !p.no_reversal,
    })
}

pub fn cmd_average(p: &AverageParams, seed: u64) -> crate::Result<AveragingReport> {
    let mc = MCConfig::new(p.n_samples, seed)?;
    averaging_report(&p.tensor_config(), p.m, p.k, &ParticlePoint { x: p.x, p: p.p }, &mc)
}

/// What a command produced: primary text, optional sidecar, exit code.
struct Emitted {
    primary: String,
    sidecar: Option<String>,
    exit: i32,
}

fn json_only(format: Format, command: &str) -> CliResult<()> {
    if format == Format::Csv {
        return Err(CliError::input(format!("csv output is not available for {command}")));
    }
    Ok(())
}

fn execute(cli: &Cli, config: &RunConfig, format: Format, seed: u64) -> CliResult<Emitted> {
    let params = &config.params;
    let ok = |primary: String| Emitted { primary, sidecar: None, exit: EXIT_OK };
    match &cli.command {
        Command::Orbit(args) => {
            json_only(format, "orbit")?;
            let p: OrbitParams = resolve_params(params, args)?;
            Ok(ok(to_json_string(&cmd_orbit(&p)?)))
        }
        Command::Simulate(args) => {
            let p: SimulateParams = resolve_params(params, args)?;
            let out = cmd_simulate(&p)?;
            let primary = match format {
                Format::Csv => out.trajectory.to_csv_string(),
                Format::Json => to_json_string(&out.trajectory),
            };
            let sidecar = (p.measure_period || p.reversal.is_some()).then(|| to_json_string(&out.sidecar));
            Ok(Emitted { primary, sidecar, exit: EXIT_OK })
        }
        Command::Repsolve(args) => {
            json_only(format, "repsolve")?;
            let p: RepsolveParams = resolve_params(params, args)?;
            Ok(ok(to_json_string(&cmd_repsolve(&p)?)))
        }
        Command::Verify(args) => {
            json_only(format, "verify")?;
            let p: VerifyParams = resolve_params(params, args)?;
            let report = cmd_verify(&p, seed)?;
            let exit = if report.passed() { EXIT_OK } else { EXIT_TOLERANCE };
            Ok(Emitted { primary: to_json_string(&report), sidecar: None, exit })
        }
        Command::Average(args) => {
            json_only(format, "average")?;
            let p: AverageParams = resolve_params(params, args)?;
            let report = cmd_average(&p, seed)?;
            let exit = if report.passed() { EXIT_OK } else { EXIT_TOLERANCE };
            Ok(Emitted { primary: to_json_string(&report), sidecar: None, exit })
        }
    }
}

fn load_config(path: Option<&Path>) -> CliResult<RunConfig> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Sidecar path for a primary output path: `<out>.sidecar.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".sidecar.json");
    PathBuf::from(s)
}

fn run_parsed(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<i32> {
    let config = load_config(cli.config.as_deref())?;
    if let Some(c) = &config.command {
        if c != cli.command.name() {
            return Err(CliError::input(format!("config is for {c:?}, not {:?}", cli.command.name())));
        }
    }
    let default_format = if matches!(cli.command, Command::Simulate(_)) { Format::Csv } else { Format::Json };
    let format = cli.format.or(config.format).unwrap_or(default_format);
    let seed = cli.seed.or(config.seed).unwrap_or(0);
    let out = cli.out.clone().or(config.out.clone());

    let emitted = execute(cli, &config, format, seed)?;
    match &out {
        Some(path) => {
            fs::write(path, &emitted.primary).map_err(|e| CliError::io(path, e))?;
            if let Some(side) = &emitted.sidecar {
                let sp = sidecar_path(path);
                fs::write(&sp, side).map_err(|e| CliError::io(&sp, e))?;
            }
        }
        None => {
            stdout.write_all(emitted.primary.as_bytes()).map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
            if let Some(side) = &emitted.sidecar {
                stderr.write_all(side.as_bytes()).map_err(|e| CliError::io(Path::new("<stderr>"), e))?;
            }
        }
    }
    Ok(emitted.exit)
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let result = match Cli::try_parse_from(args) {
        Ok(cli) => run_parsed(&cli, stdout, stderr),
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return EXIT_OK;
            }
            let _ = write!(stderr, "{e}");
            Err(CliError::usage(e.kind().to_string()))
        }
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            let _ = stdout.write_all(to_json_string(&err.to_json()).as_bytes());
            err.exit
        }
    }
}
