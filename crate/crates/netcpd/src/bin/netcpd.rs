use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use netcpd::calibration::{calibrate_c1, estimate_rho, CalibrationTarget, Regime};
use netcpd::detector::{self, DetectorConfig, Mode, TauRule};
use netcpd::generators::{build_scenario, sample_stream, ScenarioKind, ScenarioSpec};
use netcpd::graph::AdjacencySnapshot;
use netcpd::harness::{run_experiment, write_records_csv, DetectorChoice};
use netcpd::io::{self, ScenarioSidecar};
use netcpd::np_detector::{NpEstimator, NpStrategy};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "netcpd", about = "Online change-point detection on network streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a scenario stream to a snapshot file (plus a ground-truth sidecar)
    Simulate(SimulateArgs),
    /// Run the spectral detector on a snapshot file
    Detect(DetectArgs),
    /// Run the block-model detector on a snapshot file
    NpDetect(NpDetectArgs),
    /// Calibrate the score constant c1 by Monte Carlo bisection
    Calibrate(CalibrateArgs),
    /// Run a replicated detection experiment and write result tables
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioId {
    #[value(name = "1")]
    S1,
    #[value(name = "2")]
    S2,
    #[value(name = "3")]
    S3,
    #[value(name = "4")]
    S4,
}

impl ScenarioId {
    fn kind(self) -> ScenarioKind {
        match self {
            ScenarioId::S1 => ScenarioKind::Sbm3,
            ScenarioId::S2 => ScenarioKind::Sbm5,
            ScenarioId::S3 => ScenarioKind::Dcbm,
            ScenarioId::S4 => ScenarioKind::Rdpg,
        }
    }
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario number (1: 3-block SBM, 2: 5-block SBM, 3: DCBM, 4: RDPG)
    #[arg(long)]
    scenario: ScenarioId,
    #[arg(long)]
    n: usize,
    /// Raw change index; omit for a no-change stream
    #[arg(long)]
    delta: Option<usize>,
    #[arg(long)]
    horizon: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ScenarioArgs {
    fn spec(&self) -> Result<ScenarioSpec> {
        let spec = ScenarioSpec {
            kind: self.scenario.kind(),
            n: self.n,
            delta: self.delta,
            horizon: self.horizon,
            seed: self.seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Output snapshot file; a `<out>.scenario.json` sidecar is written too
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Alpha,
    Arl,
}

#[derive(Clone, Copy, ValueEnum)]
enum TauRuleArg {
    Theoretical,
    Practical,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Dense,
    Edges,
}

#[derive(Args)]
struct DetectorFlags {
    /// Start from a config JSON emitted by `calibrate`; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    gamma: Option<u32>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c_gate: Option<f64>,
    #[arg(long, value_enum)]
    tau_rule: Option<TauRuleArg>,
    /// Sparsity estimate, or `auto` to estimate from the input stream
    #[arg(long, default_value = "auto")]
    rho_hat: String,
}

impl DetectorFlags {
    fn build(&self, snaps: &[AdjacencySnapshot]) -> Result<DetectorConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                io::parse_json::<DetectorConfig>(&text)?
            }
            None => DetectorConfig {
                mode: Mode::AlphaControl { alpha: 0.05 },
                c_gate: 1.0,
                c1: 1.0,
                rho_hat: 0.0, // replaced below
                tau_rule: TauRule::Practical,
                use_absolute_inner_product: false,
                max_time: None,
            },
        };
        match (self.mode, self.alpha, self.gamma) {
            (Some(ModeArg::Alpha), alpha, _) => {
                cfg.mode = Mode::AlphaControl {
                    alpha: alpha.unwrap_or(0.05),
                }
            }
            (Some(ModeArg::Arl), _, gamma) => {
                cfg.mode = Mode::ArlControl {
                    gamma: gamma.unwrap_or(150),
                }
            }
            (None, Some(alpha), None) => cfg.mode = Mode::AlphaControl { alpha },
            (None, None, Some(gamma)) => cfg.mode = Mode::ArlControl { gamma },
            (None, Some(_), Some(_)) => bail!("--alpha and --gamma are mutually exclusive"),
            (None, None, None) => {}
        }
        if let Some(c1) = self.c1 {
            cfg.c1 = c1;
        }
        if let Some(c) = self.c_gate {
            cfg.c_gate = c;
        }
        if let Some(rule) = self.tau_rule {
            cfg.tau_rule = match rule {
                TauRuleArg::Theoretical => TauRule::Theoretical,
                TauRuleArg::Practical => TauRule::Practical,
            };
        }
        match self.rho_hat.as_str() {
            "auto" => {
                if cfg.rho_hat == 0.0 {
                    cfg.rho_hat = estimate_rho(snaps)?;
                }
            }
            v => cfg.rho_hat = v.parse().context("--rho-hat must be a number or `auto`")?,
        }
        cfg.validate();
        Ok(cfg)
    }
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "dense")]
    format: FormatArg,
    /// Restart after each alarm instead of stopping at the first
    #[arg(long)]
    restart: bool,
    /// Stop consuming the raw stream after this many snapshots
    #[arg(long)]
    horizon: Option<usize>,
    #[command(flatten)]
    flags: DetectorFlags,
}

#[derive(Args)]
struct NpDetectArgs {
    #[command(flatten)]
    detect: DetectArgs,
    #[arg(long)]
    r0: usize,
    /// `exhaustive` or `alt:<restarts>,<iters>`
    #[arg(long, default_value = "alt:10,100")]
    strategy: String,
}

fn parse_strategy(s: &str) -> Result<NpStrategy> {
    if s == "exhaustive" {
        return Ok(NpStrategy::Exhaustive);
    }
    if let Some(rest) = s.strip_prefix("alt:") {
        if let Some((r, i)) = rest.split_once(',') {
            return Ok(NpStrategy::Alternating {
                restarts: r.parse().context("bad restart count")?,
                max_iters: i.parse().context("bad iteration count")?,
            });
        }
    }
    bail!("strategy must be `exhaustive` or `alt:<restarts>,<iters>`")
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    Pfa,
    Arl,
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Estimate rho from this snapshot file instead of simulated training data
    #[arg(long)]
    training_file: Option<PathBuf>,
    #[arg(long, value_enum)]
    regime: RegimeArg,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 150)]
    gamma: u32,
    #[arg(long, default_value_t = 200)]
    t_train: usize,
    #[arg(long, default_value_t = 200)]
    reps: usize,
    #[arg(long, default_value_t = 1.0)]
    c_gate: f64,
    /// Where to write the detector config JSON (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DetectorArg {
    Usvt,
    Np,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, value_enum, default_value = "usvt")]
    detector: DetectorArg,
    #[arg(long, default_value_t = 2)]
    r0: usize,
    #[arg(long, default_value_t = 50)]
    reps: usize,
    #[command(flatten)]
    flags: DetectorFlags,
    #[arg(long)]
    out_dir: PathBuf,
}

fn read_input(path: &Path, format: FormatArg) -> Result<Vec<AdjacencySnapshot>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let snaps = match format {
        FormatArg::Dense => io::parse_snapshots(&text)?,
        FormatArg::Edges => io::parse_edge_list(&text)?,
    };
    Ok(snaps)
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let spec = args.scenario.spec()?;
    let (snaps, scenario) = sample_stream(&spec)?;
    let mut file = fs::File::create(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    io::write_snapshots(&mut file, &snaps)?;
    let sidecar_path = args.out.with_extension("scenario.json");
    let mut sidecar = fs::File::create(&sidecar_path)?;
    io::write_json(&mut sidecar, &ScenarioSidecar::from_scenario(&scenario))?;
    eprintln!(
        "wrote {} snapshots (n={}) to {} (+ {})",
        snaps.len(),
        spec.n,
        args.out.display(),
        sidecar_path.display()
    );
    Ok(())
}

fn report_outcomes(outcomes: &[detector::DetectionOutcome]) -> Result<()> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for o in outcomes {
        serde_json::to_writer(&mut out, o)?;
        writeln!(out)?;
    }
    let fired = outcomes.iter().filter(|o| o.fired).count();
    if fired == 0 {
        eprintln!("no alarm raised over {} outcome(s)", outcomes.len());
    } else {
        for (k, o) in outcomes.iter().filter(|o| o.fired).enumerate() {
            eprintln!(
                "alarm {}: raw time {} (split {}), grid point s={}, score {:.4} > b={:.4}, gate {:.4}",
                k + 1,
                o.t_raw.unwrap_or(0),
                o.t_split.unwrap_or(0),
                o.s_hit.unwrap_or(0),
                o.score,
                o.threshold_used,
                o.gate_value
            );
        }
    }
    Ok(())
}

fn cmd_detect(args: DetectArgs) -> Result<()> {
    let snaps = read_input(&args.input, args.format)?;
    let mut cfg = args.flags.build(&snaps)?;
    if args.horizon.is_some() {
        cfg.max_time = args.horizon;
    }
    let outcomes = if args.restart {
        detector::run_multi(snaps, &cfg)?
    } else {
        vec![detector::run(snaps, &cfg)?]
    };
    report_outcomes(&outcomes)
}

fn cmd_np_detect(args: NpDetectArgs) -> Result<()> {
    let snaps = read_input(&args.detect.input, args.detect.format)?;
    let mut cfg = args.detect.flags.build(&snaps)?;
    if args.detect.horizon.is_some() {
        cfg.max_time = args.detect.horizon;
    }
    let est = NpEstimator {
        r0: args.r0,
        strategy: parse_strategy(&args.strategy)?,
    };
    let outcomes = if args.detect.restart {
        detector::run_multi_with(snaps, &cfg, &est)?
    } else {
        vec![detector::run_with(snaps, &cfg, &est)?]
    };
    report_outcomes(&outcomes)
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<()> {
    let spec = args.scenario.spec()?.without_change();
    let rho_hat = match &args.training_file {
        Some(path) => {
            let snaps = read_input(path, FormatArg::Dense)?;
            estimate_rho(&snaps)?
        }
        None => {
            let train_spec = ScenarioSpec {
                horizon: args.t_train,
                ..spec.clone()
            };
            let (snaps, _) = sample_stream(&train_spec)?;
            estimate_rho(&snaps)?
        }
    };
    let (mode, regime) = match args.regime {
        RegimeArg::Pfa => (
            Mode::AlphaControl { alpha: args.alpha },
            Regime::Pfa {
                alpha: args.alpha,
                t_train: args.t_train,
            },
        ),
        RegimeArg::Arl => (
            Mode::ArlControl { gamma: args.gamma },
            Regime::Arl { gamma: args.gamma },
        ),
    };
    let template = DetectorConfig {
        mode,
        c_gate: args.c_gate,
        c1: 1.0,
        rho_hat,
        tau_rule: TauRule::Practical,
        use_absolute_inner_product: false,
        max_time: None,
    };
    let target = CalibrationTarget {
        regime,
        reps: args.reps,
        c1_low: 1e-6,
        c1_high: 64.0,
        max_steps: 40,
    };
    let cal = calibrate_c1(&spec, &template, &target)?;
    let cfg = DetectorConfig {
        c1: cal.c1,
        ..template
    };
    eprintln!("calibrated c1 = {:.6} (achieved {:.4})", cal.c1, cal.achieved);
    match &args.out {
        Some(path) => {
            let mut f = fs::File::create(path)?;
            io::write_json(&mut f, &cfg)?;
        }
        None => {
            let stdout = std::io::stdout();
            io::write_json(&mut stdout.lock(), &cfg)?;
        }
    }
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> Result<()> {
    let spec = args.scenario.spec()?;
    // rho for the config: estimate from a training draw of the null law
    let train_spec = ScenarioSpec {
        delta: None,
        horizon: spec.horizon.min(200),
        ..spec.clone()
    };
    let (train, _) = sample_stream(&train_spec)?;
    let cfg = args.flags.build(&train)?;
    let choice = match args.detector {
        DetectorArg::Usvt => DetectorChoice::Usvt,
        DetectorArg::Np => DetectorChoice::Np {
            r0: args.r0,
            restarts: 10,
            max_iters: 100,
        },
    };
    let result = run_experiment(&spec, &cfg, &choice, args.reps, spec.seed)?;
    fs::create_dir_all(&args.out_dir)?;
    let mut csv = fs::File::create(args.out_dir.join("results.csv"))?;
    write_records_csv(&mut csv, &result.records)?;
    let mut agg = fs::File::create(args.out_dir.join("aggregate.json"))?;
    io::write_json(&mut agg, &result.aggregate())?;
    #[derive(serde::Serialize)]
    struct ConfigDump<'a> {
        spec: &'a ScenarioSpec,
        config: &'a DetectorConfig,
        detector: &'a DetectorChoice,
        scenario_kappa0: f64,
    }
    let scenario = build_scenario(&spec)?;
    let mut cfg_file = fs::File::create(args.out_dir.join("config.json"))?;
    io::write_json(
        &mut cfg_file,
        &ConfigDump {
            spec: &spec,
            config: &result.config,
            detector: &result.detector,
            scenario_kappa0: scenario.kappa0,
        },
    )?;
    match result.delay {
        Some(d) => eprintln!("reps={} delay={:.2} pfa={:.3}", args.reps, d, result.pfa),
        None => eprintln!("reps={} delay=undefined pfa={:.3}", args.reps, result.pfa),
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Detect(a) => cmd_detect(a),
        Command::NpDetect(a) => cmd_np_detect(a),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Experiment(a) => cmd_experiment(a),
    }
}
