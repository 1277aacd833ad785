//! `bivver`: build verification strategies, solve the relaxations, sweep
//! state families into CSV and simulate the pass/fail protocol.

use std::f64::consts::FRAC_PI_4;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use bivver_core::constructors::{
    mean_top_square, near_optimal_two_way, near_optimal_value, one_way_optimal, one_way_value,
    one_way_weight, two_qubit_two_way,
};
use bivver_core::optimizer::{ppt_min_eigenvalue, reconstruct_omega, solve_relaxation};
use bivver_core::protocol::{
    chernoff_confidence, confidence_iid, copies_needed, simulate, worst_case_for,
};
use bivver_core::states::{fidelity, RENORM_TOL};
use bivver_core::strategy::{diagnose, matrix_from_json, MatrixJson};
use bivver_core::{
    DensityOperator, Error as CoreError, Mode, SchmidtState, SimMode, SolverOptions, StateInput,
    Strategy,
};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "bivver", version, about = "Adaptive verification of bipartite pure states")]
struct Cli {
    /// Target state: a JSON file or inline JSON such as '{"schmidt":[0.8,0.6]}'.
    #[arg(long, global = true)]
    state: Option<String>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output format; defaults to csv for `sweep` and json otherwise.
    #[arg(long, global = true)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    OneWay,
    #[value(name = "two-way-2qubit")]
    TwoWay2Qubit,
    TwoWayNear,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    OneWay,
    TwoWay,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::OneWay => Mode::OneWay,
            ModeArg::TwoWay => Mode::TwoWay,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SimModeArg {
    StopOnFail,
    Frequency,
}

impl From<SimModeArg> for SimMode {
    fn from(m: SimModeArg) -> Self {
        match m {
            SimModeArg::StopOnFail => SimMode::StopOnFail,
            SimModeArg::Frequency => SimMode::Frequency,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StateFamily {
    /// `cos θ|00⟩ + sin θ|11⟩`.
    TwoQubit,
    /// `√(2/3) cos θ|00⟩ + √(1/3)|11⟩ + √(2/3) sin θ|22⟩`.
    Qutrit,
}

#[derive(Subcommand)]
enum Command {
    /// Build a strategy for --state and write it as JSON.
    Strategy {
        #[arg(long)]
        family: Family,
    },
    /// Solve a relaxation for --state.
    Optimize {
        #[arg(long)]
        mode: ModeArg,
        #[arg(long, default_value_t = SolverOptions::default().tol_outer)]
        tol_outer: f64,
        #[arg(long, default_value_t = SolverOptions::default().tol_inner)]
        tol_inner: f64,
        #[arg(long, default_value_t = SolverOptions::default().max_iter)]
        max_iter: usize,
        /// Do not open the two-way bisection at the near-optimal point.
        #[arg(long)]
        no_seed: bool,
        /// Report non-convergence instead of finishing on the barrier path.
        #[arg(long)]
        no_polish: bool,
    },
    /// Tabulate optimal values over a one-parameter state family.
    ///
    /// The grid is θ_k = min + k (max − min)/steps for k = 1..=steps.
    Sweep {
        #[arg(long, value_enum, default_value = "two-qubit")]
        states: StateFamily,
        #[arg(long, default_value_t = 0.0)]
        theta_min: f64,
        #[arg(long, default_value_t = FRAC_PI_4)]
        theta_max: f64,
        #[arg(long, default_value_t = 64)]
        steps: usize,
        /// Also solve the two-way relaxation at every point.
        #[arg(long)]
        numeric: bool,
    },
    /// Run the protocol on i.i.d. copies of a worst-case or supplied state.
    Simulate {
        /// Strategy JSON written by `strategy`.
        #[arg(long)]
        strategy: PathBuf,
        /// Infidelity of the worst-case state to test against.
        #[arg(long, required_unless_present = "sigma")]
        epsilon: Option<f64>,
        /// Density matrix JSON (rows of [re, im]) to test instead.
        #[arg(long, conflicts_with = "epsilon")]
        sigma: Option<PathBuf>,
        /// Copies per trial, or `from` to use the number needed for --delta.
        #[arg(long, default_value = "1000")]
        copies: String,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 1)]
        trials: u64,
        #[arg(long, value_enum, default_value = "frequency")]
        mode: SimModeArg,
    },
    /// Number of copies needed to reach confidence 1 − δ.
    Copies {
        /// Spectral gap; taken from --strategy when omitted.
        #[arg(long, required_unless_present = "strategy")]
        v: Option<f64>,
        #[arg(long)]
        strategy: Option<PathBuf>,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = match err.downcast_ref::<CoreError>() {
                Some(CoreError::SolverNonConvergence { .. }) => 3,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Ok(threads) = std::env::var("BIVVER_THREADS") {
        let n: usize = threads
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| anyhow!("BIVVER_THREADS must be a positive integer, got {threads:?}"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let format = cli.format;
    let out = Output {
        path: cli.output.clone(),
    };
    match &cli.command {
        Command::Strategy { family } => {
            require_json(format, "strategy")?;
            cmd_strategy(&load_state(&cli)?, *family, &out)
        }
        Command::Optimize {
            mode,
            tol_outer,
            tol_inner,
            max_iter,
            no_seed,
            no_polish,
        } => {
            require_json(format, "optimize")?;
            let opts = SolverOptions {
                tol_outer: *tol_outer,
                tol_inner: *tol_inner,
                max_iter: *max_iter,
                seed_two_way: !no_seed,
                polish: !no_polish,
                ..SolverOptions::default()
            };
            cmd_optimize(&load_state(&cli)?, (*mode).into(), &opts, &out)
        }
        Command::Sweep {
            states,
            theta_min,
            theta_max,
            steps,
            numeric,
        } => cmd_sweep(
            *states,
            *theta_min,
            *theta_max,
            *steps,
            *numeric,
            format.unwrap_or(Format::Csv),
            &out,
        ),
        Command::Simulate {
            strategy,
            epsilon,
            sigma,
            copies,
            delta,
            trials,
            mode,
        } => {
            require_json(format, "simulate")?;
            let strategy = read_strategy(strategy)?;
            let sigma = match sigma {
                Some(path) => Some(read_sigma(path, &strategy)?),
                None => None,
            };
            let run = SimArgs {
                epsilon: *epsilon,
                sigma,
                copies,
                delta: *delta,
                trials: *trials,
                mode: (*mode).into(),
                seed: cli.seed,
            };
            cmd_simulate(&strategy, run, &out)
        }
        Command::Copies {
            v,
            strategy,
            epsilon,
            delta,
        } => {
            let v = match (v, strategy) {
                (Some(v), _) => *v,
                (None, Some(path)) => read_strategy(path)?.v()?,
                (None, None) => bail!("either --v or --strategy is required"),
            };
            cmd_copies(v, *epsilon, *delta, format.unwrap_or(Format::Json), &out)
        }
    }
}

fn require_json(format: Option<Format>, command: &str) -> Result<()> {
    if format == Some(Format::Csv) {
        bail!("`{command}` only writes JSON");
    }
    Ok(())
}

/// Destination of the command's main result.
struct Output {
    path: Option<PathBuf>,
}

impl Output {
    fn write(&self, text: &str) -> Result<()> {
        let mut text = text.to_owned();
        if !text.ends_with('\n') {
            text.push('\n');
        }
        match &self.path {
            Some(path) => {
                fs::write(path, text).with_context(|| format!("writing {}", path.display()))
            }
            None => Ok(std::io::stdout().write_all(text.as_bytes())?),
        }
    }

    fn json(&self, value: &Value) -> Result<()> {
        self.write(&serde_json::to_string_pretty(value)?)
    }
}

fn load_state(cli: &Cli) -> Result<SchmidtState> {
    let raw = cli
        .state
        .as_deref()
        .ok_or_else(|| anyhow!("this command needs --state"))?;
    let text = if raw.trim_start().starts_with('{') {
        raw.to_owned()
    } else {
        fs::read_to_string(raw).with_context(|| format!("reading state file {raw}"))?
    };
    Ok(normalized(StateInput::from_json(&text)?).to_state()?)
}

/// Rescales hand-typed input such as `[0.866, 0.5]` to unit norm; the core
/// only absorbs rounding-level deviations.
fn normalized(input: StateInput) -> StateInput {
    let norm_sq: f64 = match &input {
        StateInput::Schmidt { schmidt } => schmidt.iter().map(|x| x * x).sum(),
        StateInput::Amplitudes { amplitudes } => amplitudes
            .iter()
            .flatten()
            .map(|[re, im]| re * re + im * im)
            .sum(),
    };
    if !(norm_sq.is_finite() && norm_sq > 0.0) || (norm_sq - 1.0).abs() <= RENORM_TOL {
        return input;
    }
    eprintln!("note: --state rescaled from squared norm {norm_sq}");
    let k = norm_sq.sqrt();
    match input {
        StateInput::Schmidt { schmidt } => StateInput::Schmidt {
            schmidt: schmidt.iter().map(|x| x / k).collect(),
        },
        StateInput::Amplitudes { amplitudes } => StateInput::Amplitudes {
            amplitudes: amplitudes
                .iter()
                .map(|row| row.iter().map(|[re, im]| [re / k, im / k]).collect())
                .collect(),
        },
    }
}

fn read_strategy(path: &Path) -> Result<Strategy> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading strategy {}", path.display()))?;
    Ok(Strategy::from_json(&text)?)
}

fn read_sigma(path: &Path, strategy: &Strategy) -> Result<DensityOperator> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading sigma {}", path.display()))?;
    let rows: MatrixJson = serde_json::from_str(&text)?;
    Ok(DensityOperator::new(
        matrix_from_json(&rows)?,
        strategy.target().dims(),
    )?)
}

fn cmd_strategy(state: &SchmidtState, family: Family, out: &Output) -> Result<()> {
    let (strategy, weight) = match family {
        Family::OneWay => (one_way_optimal(state)?, Some(one_way_weight(state))),
        Family::TwoWay2Qubit => {
            let theta = state.theta().ok_or_else(|| {
                anyhow!(
                    "two-way-2qubit needs a two-qubit entangled state, got Schmidt rank {}",
                    state.dim()
                )
            })?;
            (two_qubit_two_way(theta)?, None)
        }
        Family::TwoWayNear => {
            let l2 = mean_top_square(state)?;
            (near_optimal_two_way(state)?, Some(l2 / (1.0 + l2)))
        }
    };
    let diag = diagnose(&strategy)?;
    eprintln!("v = {}", strategy.v()?);
    if let Some(w) = weight {
        eprintln!("w = {w}");
    }
    eprintln!("d = {}", state.dim());
    eprintln!(
        "residuals: fidelity {:.3e}, bounds {:.3e}, sender marginal {:.3e}, semi-optimal {:.3e}; \
         min partial-transpose eigenvalue {:.3e}",
        diag.fidelity.residual,
        diag.bounds.residual,
        diag.sender_marginal.residual,
        diag.semi_optimal.residual,
        diag.ppt.residual
    );
    out.write(&strategy.to_json()?)
}

fn cmd_optimize(state: &SchmidtState, mode: Mode, opts: &SolverOptions, out: &Output) -> Result<()> {
    let sol = solve_relaxation(state, mode, opts)?;
    let omega = reconstruct_omega(&sol, state);
    let ppt_min = ppt_min_eigenvalue(&omega, state.dims())?;
    let reference = match mode {
        Mode::OneWay => one_way_value(state),
        Mode::TwoWay => near_optimal_value(state)?,
    };
    eprintln!("value = {}", sol.value);
    eprintln!(
        "residuals: rho bounds {:.3e}, pinning {:.3e}, row sums {:.3e}, hyperbolic {:.3e}, negativity {:.3e}",
        sol.residuals.rho_bounds,
        sol.residuals.pinning,
        sol.residuals.row_sums,
        sol.residuals.hyperbolic,
        sol.residuals.negativity
    );
    eprintln!(
        "PPT: {} (min partial-transpose eigenvalue {ppt_min:.3e})",
        if ppt_min >= -1e-9 { "yes" } else { "no" }
    );
    let mut value = serde_json::to_value(sol.to_file())?;
    value["mode"] = serde_json::to_value(mode)?;
    value["ppt_min_eigenvalue"] = json!(ppt_min);
    value["analytic_reference"] = json!(reference);
    out.json(&value)
}

struct SweepRow {
    theta: f64,
    one_way: f64,
    near: f64,
    numeric: Option<f64>,
}

fn family_state(family: StateFamily, theta: f64) -> Result<SchmidtState> {
    Ok(match family {
        StateFamily::TwoQubit => SchmidtState::two_qubit(theta)?,
        StateFamily::Qutrit => {
            let a = (2.0f64 / 3.0).sqrt();
            SchmidtState::from_schmidt(&[a * theta.cos(), (1.0f64 / 3.0).sqrt(), a * theta.sin()])?
        }
    })
}

fn cmd_sweep(
    family: StateFamily,
    min: f64,
    max: f64,
    steps: usize,
    numeric: bool,
    format: Format,
    out: &Output,
) -> Result<()> {
    if steps == 0 || !(max > min) {
        bail!("empty grid: need --steps > 0 and --theta-max > --theta-min");
    }
    let opts = SolverOptions::default();
    let rows = (1..=steps)
        .into_par_iter()
        .map(|k| -> Result<SweepRow> {
            let theta = min + (max - min) * k as f64 / steps as f64;
            let state = family_state(family, theta)?;
            let numeric = if numeric {
                Some(solve_relaxation(&state, Mode::TwoWay, &opts)?.value)
            } else {
                None
            };
            Ok(SweepRow {
                theta,
                one_way: one_way_value(&state),
                near: near_optimal_value(&state)?,
                numeric,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    match format {
        Format::Csv => {
            let fmt = |x: f64| format!("{x:.16e}");
            let mut text = String::from("theta,v_one_way,v_two_way_near,v_two_way_numeric,ratio\n");
            for r in &rows {
                let (num, ratio) = match r.numeric {
                    Some(n) => (fmt(n), fmt(n / r.near)),
                    None => (String::new(), String::new()),
                };
                text += &format!(
                    "{},{},{},{num},{ratio}\n",
                    fmt(r.theta),
                    fmt(r.one_way),
                    fmt(r.near)
                );
            }
            out.write(&text)
        }
        Format::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "theta": r.theta,
                        "v_one_way": r.one_way,
                        "v_two_way_near": r.near,
                        "v_two_way_numeric": r.numeric,
                        "ratio": r.numeric.map(|n| n / r.near),
                    })
                })
                .collect();
            out.json(&Value::Array(rows))
        }
    }
}

struct SimArgs<'a> {
    epsilon: Option<f64>,
    sigma: Option<DensityOperator>,
    copies: &'a str,
    delta: Option<f64>,
    trials: u64,
    mode: SimMode,
    seed: u64,
}

fn cmd_simulate(strategy: &Strategy, args: SimArgs, out: &Output) -> Result<()> {
    let v = strategy.v()?;
    let (sigma, epsilon) = match (args.sigma, args.epsilon) {
        (Some(sigma), _) => {
            let eps = 1.0 - fidelity(strategy.target(), &sigma)?;
            (sigma, eps)
        }
        (None, Some(eps)) => (worst_case_for(strategy, eps)?, eps),
        (None, None) => bail!("either --epsilon or --sigma is required"),
    };
    let copies = if args.copies == "from" {
        let delta = args
            .delta
            .ok_or_else(|| anyhow!("--copies from needs --delta"))?;
        copies_needed(v, epsilon, delta)?
    } else {
        args.copies
            .parse()
            .map_err(|_| anyhow!("--copies must be a positive integer or `from`"))?
    };
    eprintln!("N = {copies}");

    let report = simulate(strategy, &sigma, copies, args.trials, args.seed, args.mode)?;
    eprintln!(
        "empirical fail rate {} vs analytic {}",
        report.empirical_fail_rate, report.analytic_rate
    );
    if epsilon > 0.0 {
        eprintln!("iid bound (1 - εv)^N = {}", confidence_iid(v, epsilon, copies)?);
        if args.mode == SimMode::Frequency {
            // every copy is measured, so the observed pass frequency feeds the Chernoff bound
            let n = copies * args.trials;
            let f = report.pass_rate();
            match chernoff_confidence(f, v, epsilon, n) {
                Ok(bound) => eprintln!("Chernoff bound at f = {f} over {n} copies: {bound}"),
                Err(_) => eprintln!("Chernoff bound: not applicable, f = {f} ≤ 1 - εv"),
            }
        }
    }
    out.json(&serde_json::to_value(&report)?)
}

fn cmd_copies(v: f64, epsilon: f64, delta: f64, format: Format, out: &Output) -> Result<()> {
    let n = copies_needed(v, epsilon, delta)?;
    let confidence = confidence_iid(v, epsilon, n)?;
    eprintln!("N = {n}");
    match format {
        Format::Json => out.json(&json!({
            "v": v,
            "epsilon": epsilon,
            "delta": delta,
            "copies": n,
            "confidence": confidence,
        })),
        Format::Csv => out.write(&format!(
            "v,epsilon,delta,copies,confidence\n{v:.16e},{epsilon:.16e},{delta:.16e},{n},{confidence:.16e}\n"
        )),
    }
}
