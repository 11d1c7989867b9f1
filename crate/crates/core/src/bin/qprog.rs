use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qprog::certify::{certify, CertifyOptions};
use qprog::harness::config::{normalize_key, parse_list, parse_num, read_config_file, ExperimentConfig};
use qprog::harness::output::{emit_csv, records_to_csv};
use qprog::harness::run::{dephasing_targets, reference_losses, run_online, solve_reference_cfg};
use qprog::harness::schedule::gen_schedule;
use qprog::harness::sweep::{ls_slope, run_sweep, write_sweep, SweepConfig};
use qprog::processor::GtpProcessor;
use qprog::Error;

#[derive(Parser, Debug)]
#[command(name = "qprog", version, about = "Online program-state optimization for a teleportation processor")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one online experiment and write its per-step CSV.
    Run(ExpArgs),
    /// Normalized regret over a p_max x seed x T grid: CSVs and an SVG.
    Sweep {
        #[command(flatten)]
        exp: ExpArgs,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Check invariants and regret bounds; exit 2 if any check fails.
    Certify {
        #[command(flatten)]
        exp: ExpArgs,
        /// Random instances per randomized check.
        #[arg(long)]
        instances: Option<usize>,
        /// Competitors per step in the mirror-step certificate.
        #[arg(long)]
        trials: Option<usize>,
        /// Number of seeds for the regret-bound runs.
        #[arg(long)]
        seeds: Option<u64>,
    },
    /// Solve only the hindsight reference program.
    Reference(ExpArgs),
}

#[derive(Args, Debug, Default)]
struct ExpArgs {
    /// Flat `key = value` config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// trace or fidelity
    #[arg(long)]
    loss: Option<String>,
    #[arg(long)]
    p_max: Option<String>,
    #[arg(long)]
    p_min: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    /// A positive number or `theoretical`.
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// uniform, constant or custom
    #[arg(long)]
    schedule: Option<String>,
    /// Comma-separated probabilities for the custom schedule.
    #[arg(long)]
    probabilities: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    d_const: Option<String>,
    #[arg(long)]
    ref_iters: Option<String>,
    /// Reference solver rate is `ref_base / T`.
    #[arg(long)]
    ref_base: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct SweepArgs {
    /// Comma-separated p_max values.
    #[arg(long)]
    p_max_list: Option<String>,
    /// Replicates per p_max.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    t_stride: Option<String>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<String>,
}

const SWEEP_KEYS: [&str; 4] = ["p_max_list", "seeds", "t_stride", "jobs"];

enum Failure {
    Config(String),
    Runtime(String),
    Certification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(e) => Failure::Runtime(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Certification) => ExitCode::from(2),
    }
}

/// File settings first, then flags.
fn settings(args: &ExpArgs, extra: &[(&str, &Option<String>)]) -> Result<BTreeMap<String, String>, Error> {
    let mut map = match &args.config {
        Some(path) => read_config_file(path)?,
        None => BTreeMap::new(),
    };
    let flags: [(&str, &Option<String>); 11] = [
        ("loss", &args.loss),
        ("p_max", &args.p_max),
        ("p_min", &args.p_min),
        ("horizon", &args.horizon),
        ("eta", &args.eta),
        ("seed", &args.seed),
        ("probabilities", &args.probabilities),
        ("schedule", &args.schedule),
        ("d_const", &args.d_const),
        ("ref_iters", &args.ref_iters),
        ("ref_base", &args.ref_base),
    ];
    for (k, v) in flags.iter().chain(extra) {
        if let Some(v) = v {
            map.insert(normalize_key(k), v.clone());
        }
    }
    if let Some(out) = &args.out {
        map.insert("out".into(), out.display().to_string());
    }
    Ok(map)
}

fn experiment(map: &BTreeMap<String, String>) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::default();
    cfg.apply(
        map.iter()
            .filter(|(k, _)| !SWEEP_KEYS.contains(&k.as_str()))
            .map(|(k, v)| (k.as_str(), v.as_str())),
    )?;
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    let gtp = GtpProcessor::new();
    match cmd {
        Command::Run(args) => {
            let cfg = experiment(&settings(&args, &[])?)?;
            let r = run_online(&cfg, &gtp)?;
            match &cfg.output_path {
                Some(path) => emit_csv(&r, path)?,
                None => print!("{}", records_to_csv(&r.records)),
            }
            eprintln!(
                "T = {}  eta = {:.6}  L_* = {:.6} ({:?})  regret = {:.6}  normalized = {:.6}  wall = {:.3}s",
                r.horizon(),
                r.metadata.eta,
                r.metadata.grad_bound,
                r.metadata.grad_bound_source,
                r.regret,
                r.normalized_regret,
                r.metadata.wall_time_secs
            );
            Ok(())
        }
        Command::Sweep { exp, sweep } => {
            let extra = [
                ("p_max_list", &sweep.p_max_list),
                ("seeds", &sweep.seeds),
                ("t_stride", &sweep.t_stride),
                ("jobs", &sweep.jobs),
            ];
            let map = settings(&exp, &extra)?;
            let mut sc = SweepConfig {
                base: experiment(&map)?,
                ..SweepConfig::default()
            };
            if let Some(v) = map.get("p_max_list") {
                sc.p_max_list = parse_list("p_max_list", v)?;
            }
            if let Some(v) = map.get("seeds") {
                sc.replicates = parse_num("seeds", v)?;
            }
            if let Some(v) = map.get("t_stride") {
                sc.t_stride = parse_num("t_stride", v)?;
            }
            if let Some(v) = map.get("jobs") {
                sc.jobs = Some(parse_num("jobs", v)?);
            }
            sc.validate()?;
            let dir = sc.base.output_path.clone().unwrap_or_else(|| PathBuf::from("sweep_out"));
            let result = run_sweep(&sc, &gtp)?;
            let written = write_sweep(&result, &dir)?;
            for c in result.mean_curves() {
                let last = c.points.last().map(|p| p.1).unwrap_or(f64::NAN);
                let slope = ls_slope(&c.points, 10, sc.base.schedule.effective_horizon());
                eprintln!(
                    "p_max = {}  normalized regret at T = {}: {last:.6}  slope: {}",
                    c.p_max,
                    c.points.last().map(|p| p.0).unwrap_or(0),
                    slope.map_or("n/a".into(), |s| format!("{s:.3e}"))
                );
            }
            eprintln!("wrote {} files to {}", written.len(), dir.display());
            Ok(())
        }
        Command::Certify {
            exp,
            instances,
            trials,
            seeds,
        } => {
            let cfg = experiment(&settings(&exp, &[])?)?;
            let mut opts = CertifyOptions::default();
            if let Some(n) = instances {
                opts.random_instances = n;
            }
            if let Some(n) = trials {
                opts.certificate_trials = n;
            }
            if let Some(n) = seeds {
                opts.seeds = n;
            }
            let report = certify(&cfg, &opts)?;
            println!("{report}");
            if let Some(path) = &cfg.output_path {
                std::fs::write(path, format!("{report}\n")).map_err(|e| Failure::Runtime(e.to_string()))?;
            }
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Certification)
            }
        }
        Command::Reference(args) => {
            let cfg = experiment(&settings(&args, &[])?)?;
            let schedule = gen_schedule(&cfg.schedule)?;
            let targets = dephasing_targets(&schedule)?;
            let pi = solve_reference_cfg(&targets, &cfg, &gtp)?;
            let losses = reference_losses(&targets, cfg.loss, &pi, &gtp)?;
            let total: f64 = losses.iter().sum();
            let mut text = String::new();
            let _ = writeln!(text, "# reference program, rows of re,im pairs");
            let m = pi.matrix();
            for i in 0..m.dim() {
                let row: Vec<String> = (0..m.dim())
                    .map(|j| {
                        let z = m.get(i, j);
                        format!("{:.16e},{:.16e}", z.re, z.im)
                    })
                    .collect();
                let _ = writeln!(text, "{}", row.join(","));
            }
            let _ = writeln!(text, "# summed loss {total:.16e}, mean {:.16e}", total / losses.len() as f64);
            match &cfg.output_path {
                Some(path) => std::fs::write(path, text).map_err(|e| Failure::Runtime(e.to_string()))?,
                None => print!("{text}"),
            }
            Ok(())
        }
    }
}
