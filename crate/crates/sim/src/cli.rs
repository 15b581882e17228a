//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use dmimo_core::dual::TrainStatus;
use dmimo_core::harness::{AreaConfig, Policy};
use dmimo_core::{AscentConfig, Metrics, Scheme};

use crate::config::ScenarioFile;
use crate::error::{Result, SimError};
use crate::policy::{csv_err, write_convergence_log, PolicyFile};
use crate::runner::{RunOptions, Runner};
use crate::sweep::{sweep, write_sweep_csv, Manifest};

#[derive(Debug, Parser)]
#[command(name = "dmimo", version, about = "QoS-driven base-station selection for distributed multi-user MIMO")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a scenario file and print derived quantities.
    Validate(RunArgs),
    /// Train the dual multipliers of one or all schemes.
    Train(RunArgs),
    /// Evaluate trained policies on fresh frames.
    Evaluate(RunArgs),
    /// Train and evaluate over a parameter grid.
    Sweep(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Bdpt,
    Tdma,
    Ptonly,
    All,
}

impl SchemeArg {
    pub fn schemes(self) -> Vec<Scheme> {
        match self {
            SchemeArg::Bdpt => vec![Scheme::BdPt],
            SchemeArg::Tdma => vec![Scheme::Tdma],
            SchemeArg::Ptonly => vec![Scheme::PtOnly],
            SchemeArg::All => Scheme::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    pub scheme: SchemeArg,
    /// Frames: training frames for `train`, evaluation frames otherwise.
    #[arg(long)]
    pub frames: Option<usize>,
    /// Training frames for `sweep`.
    #[arg(long)]
    pub train_frames: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub sweep_param: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub sweep_values: Option<Vec<f64>>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Merge partial results in a fixed order so outputs do not depend on
    /// the worker count.
    #[arg(long)]
    pub strict_deterministic: bool,
    /// Policy files for `evaluate` (default: `<out>/policy_<scheme>.toml`).
    #[arg(long)]
    pub policy: Vec<PathBuf>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub lambda_cap: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Interfering-area grid resolution in meters.
    #[arg(long)]
    pub grid_resolution: Option<f64>,
    /// Skip the interfering-area integration.
    #[arg(long)]
    pub no_area: bool,
}

impl RunArgs {
    pub fn options(&self, file: &ScenarioFile, frames_are_training: bool) -> RunOptions {
        let run = &file.run;
        let mut ascent = run.ascent.apply(AscentConfig::default());
        if let Some(v) = self.step {
            ascent.initial_step = v;
        }
        if let Some(v) = self.tolerance {
            ascent.tolerance = v;
        }
        if let Some(v) = self.lambda_cap {
            ascent.lambda_cap = v;
        }
        if let Some(v) = self.max_iterations {
            ascent.max_iterations = v;
        }
        let (mut train_frames, mut eval_frames) = (run.train_frames, run.eval_frames);
        if frames_are_training {
            train_frames = self.frames.unwrap_or(train_frames);
        } else {
            eval_frames = self.frames.unwrap_or(eval_frames);
        }
        if let Some(t) = self.train_frames {
            train_frames = t;
        }
        RunOptions {
            seed: self.seed.unwrap_or(run.seed),
            train_frames,
            eval_frames,
            cmax_frames: run.cmax_frames,
            area: (!self.no_area).then(|| AreaConfig { resolution: self.grid_resolution.unwrap_or(run.grid_resolution_m) }),
            ascent,
            workers: self.workers,
            strict: self.strict_deterministic,
        }
    }
}

fn load(args: &RunArgs) -> Result<ScenarioFile> {
    let file = ScenarioFile::load(&args.config)?;
    file.validate()?;
    Ok(file)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| SimError::io(format!("creating {}", dir.display()), e))
}

fn meta(file: &ScenarioFile, options: &RunOptions, schemes: &[Scheme]) -> Vec<(&'static str, String)> {
    vec![
        ("config_hash", file.hash()),
        ("seed", options.seed.to_string()),
        ("scheme", schemes.iter().map(|s| s.tag()).collect::<Vec<_>>().join("+")),
        ("code_version", crate::CODE_VERSION.to_string()),
    ]
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Validate(a) => cmd_validate(&a, stdout),
        Command::Train(a) => cmd_train(&a, stdout),
        Command::Evaluate(a) => cmd_evaluate(&a, stdout),
        Command::Sweep(a) => cmd_sweep(&a, stdout),
    }
}

fn out(stdout: &mut dyn Write, text: std::fmt::Arguments) -> Result<()> {
    stdout.write_fmt(text).map_err(|e| SimError::io("writing output", e))
}

pub fn cmd_validate(args: &RunArgs, stdout: &mut dyn Write) -> Result<i32> {
    let file = load(args)?;
    let scenario = file.scenario()?;
    let options = args.options(&file, false);
    let runner = Runner::new(options.clone())?;
    let qos = scenario.user_qos()?;
    let (priority, cmax) = runner.priority(&scenario)?;
    let to_kbps = |nats: f64| nats / (scenario.frame_duration * std::f64::consts::LN_2) / 1e3;
    out(stdout, format_args!("scenario {}: ok\n", args.config.display()))?;
    out(stdout, format_args!("config_hash = {}\n", file.hash()))?;
    out(
        stdout,
        format_args!(
            "K_bs = {}, K_mu = {}, G = {:.6e}, eta = {}, BT = {}\n",
            scenario.num_bs(),
            scenario.num_users(),
            scenario.gain_constant,
            scenario.path_loss_exponent,
            scenario.bt()
        ),
    )?;
    for (n, q) in qos.iter().enumerate() {
        out(
            stdout,
            format_args!(
                "user {}: load {:.1} kbit/s, theta = {:.6e} /nat ({:.6e} /bit), C_max ~ {:.1} kbit/s, fraction {:.4}\n",
                n + 1,
                to_kbps(q.arrival),
                q.theta,
                q.theta / std::f64::consts::LN_2,
                to_kbps(cmax[n]),
                priority.fractions[n]
            ),
        )?;
    }
    let order: Vec<String> = priority.order.iter().map(|u| (u + 1).to_string()).collect();
    out(stdout, format_args!("priority order (highest first): {}\n", order.join(", ")))?;
    Ok(0)
}

pub fn cmd_train(args: &RunArgs, stdout: &mut dyn Write) -> Result<i32> {
    let file = load(args)?;
    let scenario = file.scenario()?;
    let options = args.options(&file, true);
    let runner = Runner::new(options.clone())?;
    let schemes = args.scheme.schemes();
    ensure_dir(&args.out)?;
    let (priority, _) = runner.priority(&scenario)?;
    let mut infeasible = false;
    for &scheme in &schemes {
        let state = runner.train(&scenario, scheme, &priority)?;
        let pf = PolicyFile::from_state(scheme, &state, &priority, &file.hash(), options.seed, options.train_frames);
        pf.save(&args.out.join(format!("policy_{}.toml", scheme.tag())))?;
        write_convergence_log(
            &args.out.join(format!("convergence_{}.csv", scheme.tag())),
            &state,
            &meta(&file, &options, &[scheme]),
        )?;
        out(
            stdout,
            format_args!(
                "{}: {} after {} iterations, lambda = {:?}, max slack {:.3e}\n",
                scheme.tag(),
                pf.status,
                state.iterations,
                state.lambda,
                pf.max_slack
            ),
        )?;
        infeasible |= matches!(state.status, TrainStatus::Infeasible { .. });
    }
    Manifest::new("train", &file, &schemes, &options).save(&args.out.join("manifest_train.json"))?;
    Ok(if infeasible { 2 } else { 0 })
}

pub fn metrics_header(num_users: usize) -> Vec<String> {
    let mut h: Vec<String> = ["scheme", "L_bar", "L_bar_se", "area", "area_se"].iter().map(|s| s.to_string()).collect();
    h.extend((1..=num_users).map(|n| format!("slack_{n}")));
    h.extend((1..=num_users).map(|n| format!("rate_kbps_{n}")));
    h.push("frames".into());
    h.push("feasible".into());
    h
}

pub fn cmd_evaluate(args: &RunArgs, stdout: &mut dyn Write) -> Result<i32> {
    let file = load(args)?;
    let scenario = file.scenario()?;
    let options = args.options(&file, false);
    let runner = Runner::new(options.clone())?;
    let paths: Vec<PathBuf> = if args.policy.is_empty() {
        args.scheme.schemes().iter().map(|s| args.out.join(format!("policy_{}.toml", s.tag()))).collect()
    } else {
        args.policy.clone()
    };
    let hash = file.hash();
    let mut rows: Vec<(Scheme, Metrics, bool)> = Vec::new();
    for path in &paths {
        let pf = PolicyFile::load(path)?;
        pf.check_hash(&hash, path)?;
        let policy: Policy = pf.policy()?;
        let m = runner.evaluate(&scenario, &policy)?;
        rows.push((policy.scheme, m, pf.is_feasible()));
    }
    ensure_dir(&args.out)?;
    let schemes: Vec<Scheme> = rows.iter().map(|r| r.0).collect();
    let path = args.out.join("metrics.csv");
    let io = |e| SimError::io(format!("writing {}", path.display()), e);
    let mut f = std::fs::File::create(&path).map_err(io)?;
    for (k, v) in meta(&file, &options, &schemes) {
        writeln!(f, "# {k}={v}").map_err(io)?;
    }
    let mut w = csv::Writer::from_writer(f);
    let k = scenario.num_users();
    w.write_record(metrics_header(k)).map_err(csv_err)?;
    let kbps = 1.0 / (scenario.frame_duration * std::f64::consts::LN_2 * 1e3);
    for (scheme, m, feasible) in &rows {
        let mut rec = vec![
            scheme.tag().to_string(),
            format!("{:.6}", m.avg_bs_usage),
            format!("{:.6}", m.avg_bs_usage_se),
            format!("{:.3}", m.avg_interfering_area),
            format!("{:.3}", m.avg_interfering_area_se),
        ];
        rec.extend(m.per_user_slack.iter().map(|s| format!("{s:.6e}")));
        rec.extend(m.per_user_mean_rate.iter().map(|r| format!("{:.3}", r * kbps)));
        rec.push(m.frames_evaluated.to_string());
        rec.push(feasible.to_string());
        w.write_record(&rec).map_err(csv_err)?;
        out(
            stdout,
            format_args!(
                "{}: L_bar = {:.4} +- {:.4}, area = {:.1} +- {:.1} m^2, max slack {:.3e}\n",
                scheme.tag(),
                m.avg_bs_usage,
                m.avg_bs_usage_se,
                m.avg_interfering_area,
                m.avg_interfering_area_se,
                m.max_slack()
            ),
        )?;
    }
    w.flush().map_err(io)?;
    Manifest::new("evaluate", &file, &schemes, &options).save(&args.out.join("manifest_evaluate.json"))?;
    Ok(0)
}

pub fn cmd_sweep(args: &RunArgs, stdout: &mut dyn Write) -> Result<i32> {
    let file = load(args)?;
    let scenario = file.scenario()?;
    let options = args.options(&file, false);
    let (param, values) = match (&args.sweep_param, &args.sweep_values, &file.sweep) {
        (Some(p), Some(v), _) => (p.clone(), v.clone()),
        (None, None, Some(s)) => (s.param.clone(), s.values.clone()),
        (Some(p), None, Some(s)) if *p == s.param => (p.clone(), s.values.clone()),
        _ => return Err(SimError::Usage("sweep needs --sweep-param and --sweep-values, or a [sweep] table".into())),
    };
    let schemes = args.scheme.schemes();
    let rows = sweep(&file, &param, &values, &schemes, &options)?;
    ensure_dir(&args.out)?;
    let path = args.out.join("sweep.csv");
    let f = std::fs::File::create(&path).map_err(|e| SimError::io(format!("writing {}", path.display()), e))?;
    let mut m = meta(&file, &options, &schemes);
    m.push(("swept_param", param.clone()));
    write_sweep_csv(f, &rows, scenario.num_users(), &m)?;
    write_sweep_csv(&mut *stdout, &rows, scenario.num_users(), &[])?;
    Manifest::new("sweep", &file, &schemes, &options)
        .with_rows(&param, &values, &rows)
        .save(&args.out.join("manifest_sweep.json"))?;
    Ok(0)
}
