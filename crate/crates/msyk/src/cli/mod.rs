//! Command-line front end. Each subcommand writes plot-ready CSV files
//! and a JSON manifest into `--out`; the manifest is written even when the
//! command fails.
//!
//! Exit codes: 0 on success, 1 when a verification check fails, 2 for
//! usage errors (bad flags, unreadable config, invalid parameters).

mod verify;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::ToPrimitive;
use serde::Serialize;
use std::ffi::OsString;
use std::f64::consts::{FRAC_PI_2, LN_2};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::entropy_observables::{
    quasi_entropy, spectrum_density, vn_entropy_density, vn_entropy_density_symbolic,
};
use crate::model_core::{validate, FlatConfig, ModelParams};
use crate::permutation_saddles::catalan;
use crate::phase_solver::{classify_transition, phase_scan};
use crate::saddle_dynamics::{elliptic_solution, hyperbolic_solution, shoot_separatrix, EllipticBranch};
use crate::trajectory_sim::{curve_from_records, run_ensemble, InitialState, SimConfig};

pub use verify::{run_suite, Check, Suite};

#[derive(Debug, Parser)]
#[command(name = "msyk", version, about = "Replica saddles and trajectories of monitored Brownian SYK chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scan the mean-field rate equation over μ.
    PhaseDiagram {
        #[command(flatten)]
        common: Common,
        /// Largest μ in the scan; defaults to 1.5·(J+U).
        #[arg(long)]
        mu_max: Option<f64>,
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Tabulate the entropy density σ(θ) on [0, π/2].
    EntropyCurve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        points: usize,
    },
    /// Tabulate the entanglement spectrum density and check its moments.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 400)]
        points: usize,
    },
    /// Boundary-value trajectory of the n = 2 saddle equations.
    SaddleOde {
        #[command(flatten)]
        common: Common,
        #[arg(long = "T", default_value_t = 20.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 1.0)]
        c1: f64,
        #[arg(long, default_value_t = 1.0 - 1e-7)]
        c2: f64,
        /// Write every `stride`-th step.
        #[arg(long, default_value_t = 10)]
        stride: usize,
    },
    /// Quasi entropy S⁽ⁿ⁾ over n and θ.
    QuasiEntropy {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 5)]
        n_max: u32,
        #[arg(long, default_value_t = 20)]
        theta_points: usize,
    },
    /// Monte Carlo trajectories over a list of monitoring rates.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.05)]
        dt: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 50)]
        n_traj: usize,
        /// Comma-separated monitoring rates; defaults to the `mu` parameter.
        #[arg(long, value_delimiter = ',')]
        mu_values: Vec<f64>,
        #[arg(long, value_enum, default_value_t = InitialArg::ParityProduct)]
        initial: InitialArg,
    },
    /// Run oracle cross-checks.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InitialArg {
    ParityProduct,
    Epr,
    RandomPure,
}

impl From<InitialArg> for InitialState {
    fn from(a: InitialArg) -> Self {
        match a {
            InitialArg::ParityProduct => InitialState::ParityProduct,
            InitialArg::Epr => InitialState::Epr,
            InitialArg::RandomPure => InitialState::RandomPure,
        }
    }
}

/// Flags shared by every subcommand. Model flags mirror the
/// `ModelParams` field names.
#[derive(Debug, Clone, Args)]
#[allow(non_snake_case)]
pub struct Common {
    /// JSON file with any of the keys J, U, q, mu, N, L, n, T.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "J")]
    pub J: Option<f64>,
    #[arg(long = "U")]
    pub U: Option<f64>,
    #[arg(long)]
    pub q: Option<u32>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long = "N")]
    pub N: Option<u32>,
    #[arg(long = "L")]
    pub L: Option<u32>,
}

impl Common {
    fn flags(&self) -> FlatConfig {
        FlatConfig { J: self.J, U: self.U, q: self.q, mu: self.mu, N: self.N, L: self.L, n: None, T: None }
    }

    /// Flags over config file over defaults.
    fn resolve(&self) -> Result<ModelParams, Failure> {
        let file = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("reading {}: {e}", path.display())))?;
                serde_json::from_str::<FlatConfig>(&text).map_err(|e| Failure::usage(format!("parsing {}: {e}", path.display())))?
            }
            None => FlatConfig::default(),
        };
        Ok(file.overlay(&self.flags()).model_params(ModelParams::default()))
    }
}

/// Record of one invocation.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: serde_json::Value,
    pub seed: u64,
    pub outputs: Vec<String>,
    pub tool_version: String,
    pub wall_time_seconds: f64,
    pub status: String,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn verification(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

/// Collects output files under one directory.
struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), Failure> {
        let path = self.dir.join(name);
        let io = |e: csv::Error| Failure::usage(format!("writing {}: {e}", path.display()));
        let mut w = csv::Writer::from_path(&path).map_err(io)?;
        w.write_record(header).map_err(io)?;
        for r in rows {
            w.write_record(&r).map_err(io)?;
        }
        w.flush().map_err(|e| Failure::usage(format!("writing {}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), Failure> {
        let path = self.dir.join(name);
        let text = serde_json::to_string_pretty(value).map_err(|e| Failure::usage(e.to_string()))?;
        fs::write(&path, text + "\n").map_err(|e| Failure::usage(format!("writing {}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }
}

/// Shortest round-trip representation, so reruns are byte-identical.
fn f(x: f64) -> String {
    format!("{x:?}")
}

fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![lo];
    }
    (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect()
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    execute(cli.command)
}

pub fn execute(command: Command) -> i32 {
    let start = Instant::now();
    let (name, common) = match &command {
        Command::PhaseDiagram { common, .. } => ("phase-diagram", common),
        Command::EntropyCurve { common, .. } => ("entropy-curve", common),
        Command::Spectrum { common, .. } => ("spectrum", common),
        Command::SaddleOde { common, .. } => ("saddle-ode", common),
        Command::QuasiEntropy { common, .. } => ("quasi-entropy", common),
        Command::Simulate { common, .. } => ("simulate", common),
        Command::Verify { common, .. } => ("verify", common),
    };
    let common = common.clone();
    if let Err(e) = fs::create_dir_all(&common.out) {
        eprintln!("error: creating {}: {e}", common.out.display());
        return 2;
    }
    let mut out = Outputs { dir: common.out.clone(), files: Vec::new() };
    let mut parameters = serde_json::Value::Null;
    let result = common.resolve().and_then(|params| {
        parameters = serde_json::to_value(params).unwrap_or(serde_json::Value::Null);
        dispatch(&command, params, &common, &mut out, &mut parameters)
    });
    let status = match &result {
        Ok(()) => "ok".to_string(),
        Err(e) => format!("error: {}", e.message),
    };
    let mut files = out.files.clone();
    files.push("manifest.json".into());
    let manifest = RunManifest {
        command: name.into(),
        parameters,
        seed: common.seed,
        outputs: files,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        status,
    };
    if let Err(e) = write_manifest(&common.out, &manifest) {
        eprintln!("error: {}", e.message);
        return 2;
    }
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn write_manifest(dir: &Path, m: &RunManifest) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(m).map_err(|e| Failure::usage(e.to_string()))?;
    fs::write(dir.join("manifest.json"), text + "\n").map_err(|e| Failure::usage(format!("writing manifest: {e}")))
}

fn dispatch(
    command: &Command,
    params: ModelParams,
    common: &Common,
    out: &mut Outputs,
    parameters: &mut serde_json::Value,
) -> Result<(), Failure> {
    let usage = |e: &dyn std::fmt::Display| Failure::usage(e.to_string());
    match command {
        Command::PhaseDiagram { mu_max, points, .. } => {
            let p = validate(params).map_err(|e| usage(&e))?;
            let hi = mu_max.unwrap_or(1.5 * (p.J + p.U));
            let pts = phase_scan(&p, &grid(0.0, hi, *points)).map_err(|e| usage(&e))?;
            out.csv(
                "phase_diagram.csv",
                &["mu", "classification", "roots", "lambda_min", "lambda_max", "theta_min", "theta_max"],
                pts.iter().map(|pt| {
                    let ext = |v: &[f64], pick: fn(f64, f64) -> f64| v.iter().copied().reduce(pick).map(f).unwrap_or_default();
                    vec![
                        f(pt.mu),
                        pt.classification.label().into(),
                        pt.lambdas.len().to_string(),
                        ext(&pt.lambdas, f64::min),
                        ext(&pt.lambdas, f64::max),
                        ext(&pt.theta_branch, f64::min),
                        ext(&pt.theta_branch, f64::max),
                    ]
                }),
            )?;
            out.json("transition.json", &classify_transition(&p))
        }
        Command::EntropyCurve { points, .. } => {
            let rows = grid(0.0, FRAC_PI_2, (*points).max(2))
                .into_iter()
                .map(|t| {
                    let s = vn_entropy_density(t).map_err(|e| usage(&e))?;
                    let sym = vn_entropy_density_symbolic(t).map_err(|e| usage(&e))?;
                    Ok(vec![f(t), f(s), f(sym)])
                })
                .collect::<Result<Vec<_>, Failure>>()?;
            out.csv("entropy_curve.csv", &["theta", "sigma", "sigma_symbolic"], rows)
        }
        Command::Spectrum { points, .. } => {
            let d = spectrum_density(params.N).map_err(|e| usage(&e))?;
            let (lo, hi) = d.support;
            out.csv(
                "spectrum.csv",
                &["lambda", "density"],
                grid(lo, hi, *points + 2)
                    .into_iter()
                    .skip(1)
                    .take(*points)
                    .map(|l| vec![f(l), f(d.density(l))]),
            )?;
            let mut rows = Vec::new();
            let mut worst: f64 = 0.0;
            for k in 0..=5u32 {
                let quad = d.moment(k);
                let c = catalan(k as u64).to_f64().unwrap_or(f64::NAN);
                let exact = c * 2f64.powi((1 - k as i32) * (params.N as i32 - 2));
                let rel = ((quad - exact) / exact).abs();
                worst = worst.max(rel);
                rows.push(vec![k.to_string(), f(quad), f(exact), f(rel)]);
            }
            out.csv("spectrum_moments.csv", &["k", "quadrature", "closed_form", "rel_error"], rows)?;
            if !(worst < 1e-8) {
                return Err(Failure::verification(format!("spectrum moment mismatch {worst:e}")));
            }
            Ok(())
        }
        Command::SaddleOde { t_end, dt, c1, c2, stride, .. } => {
            let (j, u) = (params.J, params.U);
            let traj = shoot_separatrix(j, u, *t_end, *dt).map_err(|e| usage(&e))?;
            let stride = (*stride).max(1);
            *parameters = serde_json::json!({ "model": params, "T": t_end, "dt": dt, "c1": c1, "c2": c2, "stride": stride });
            out.csv(
                "saddle_trajectory.csv",
                &["t", "x1", "x2", "z1", "y1", "y2", "w1", "invariant_A", "invariant_Abar"],
                traj.states.iter().enumerate().step_by(stride).map(|(k, s)| {
                    let (ia, ib) = s.invariants();
                    [k as f64 * dt, s.x1, s.x2, s.z1, s.y1, s.y2, s.w1, ia, ib].map(f).to_vec()
                }),
            )?;
            let mut rows = Vec::new();
            for (k, _) in traj.states.iter().enumerate().step_by(stride) {
                let t = k as f64 * dt;
                let h = hyperbolic_solution(t, j, u).map_err(|e| usage(&e))?;
                let e = elliptic_solution(t, j, u, *c1, *c2, EllipticBranch::Cn).map_err(|e| usage(&e))?;
                rows.push([t, h.0, h.1, h.2, e.0, e.1, e.2].map(f).to_vec());
            }
            out.csv("saddle_closed_form.csv", &["t", "hyp_x1", "hyp_x2", "hyp_z1", "ell_x1", "ell_x2", "ell_z1"], rows)
        }
        Command::QuasiEntropy { n_max, theta_points, .. } => {
            let mut rows = Vec::new();
            for n in 2..=*n_max {
                for t in grid(0.0, FRAC_PI_2, (*theta_points).max(2)) {
                    let r = quasi_entropy(n, t, params.N, params.L).map_err(|e| usage(&e))?;
                    let d = &r.decomposition;
                    rows.push(vec![
                        n.to_string(),
                        f(t),
                        f(r.value),
                        f(d.extensive),
                        f(d.parity),
                        f(d.multiplicity),
                        f(d.single_saddle_value),
                        f(d.extensive / (params.N as f64 * params.L as f64 / 2.0 * LN_2)),
                    ]);
                }
            }
            out.csv(
                "quasi_entropy.csv",
                &["n", "theta", "value", "extensive", "parity", "multiplicity", "single_saddle", "extensive_over_volume_log2"],
                rows,
            )
        }
        Command::Simulate { dt, steps, n_traj, mu_values, initial, .. } => {
            let mus = if mu_values.is_empty() { vec![params.mu] } else { mu_values.clone() };
            *parameters = serde_json::json!({
                "model": params, "dt": dt, "steps": steps, "n_traj": n_traj, "mu_values": mus,
                "initial_state": InitialState::from(*initial),
            });
            let mut rows = Vec::new();
            for &mu in &mus {
                let config = SimConfig {
                    params: ModelParams { mu, ..params },
                    dt: *dt,
                    steps: *steps,
                    n_traj: *n_traj,
                    seed: common.seed,
                    initial_state: (*initial).into(),
                };
                let recs = run_ensemble(&config).map_err(|e| usage(&e))?;
                let curve = curve_from_records(&recs, *dt);
                for (k, t) in curve.times.iter().enumerate() {
                    let se = curve.stderr.as_ref().map(|s| f(s[k])).unwrap_or_else(|| "NaN".into());
                    rows.push(vec![f(mu), f(*t), f(curve.mean[k]), se]);
                }
            }
            out.csv("entropy_series.csv", &["mu", "t", "mean_entropy", "stderr"], rows)
        }
        Command::Verify { suite, .. } => {
            let checks = run_suite(*suite, common.seed);
            let passed = checks.iter().filter(|c| c.passed).count();
            for c in &checks {
                println!("{} {}/{}: {}", if c.passed { "PASS" } else { "FAIL" }, c.suite, c.name, c.detail);
            }
            println!("{passed}/{} checks passed", checks.len());
            out.csv(
                "verify.csv",
                &["suite", "check", "passed", "detail"],
                checks.iter().map(|c| vec![c.suite.into(), c.name.clone(), c.passed.to_string(), c.detail.clone()]),
            )?;
            if passed == checks.len() {
                Ok(())
            } else {
                Err(Failure::verification(format!("{} of {} checks failed", checks.len() - passed, checks.len())))
            }
        }
    }
}
