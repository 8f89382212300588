use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use slip_cpg::analysis::summarize;
use slip_cpg::config::{apply_override, load_over};
use slip_cpg::controller_check::{report, run_checks};
use slip_cpg::harness::{basin_scan, run_episode, Termination};
use slip_cpg::output::{write_atomic, write_episode};
use slip_cpg::sweep::{expand, parse_grid, run_points};
use slip_cpg::{ConfigError, OutputError, Preset, SimConfig, SimError, ValidatedConfig};

const EXIT_FELL: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_CANT_CREATE: u8 = 74;

#[derive(Parser)]
#[command(
    name = "slip-cpg",
    version,
    about = "CPG running controller on a SLIP plant"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode, or a parameter grid with --sweep.
    Run(RunArgs),
    /// Map which apex states settle into running.
    Basin(BasinArgs),
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long, default_value = "with-feedback")]
    preset: Preset,
    /// TOML file whose fields override the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `section.key=value`, applied after --config. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    max_steps: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Grid file: one `section.key = v1 v2 ...` line per swept field.
    #[arg(long)]
    sweep: Option<PathBuf>,
    /// Worker threads for --sweep (default: available parallelism).
    #[arg(long)]
    jobs: Option<usize>,
    /// Prefix of the output file names (default: the preset name).
    #[arg(long)]
    run_id: Option<String>,
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct BasinArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long, num_args = 1.., default_values_t = [0.87, 0.90, 0.93, 0.96, 0.99, 1.02, 1.05])]
    y0: Vec<f64>,
    #[arg(long, num_args = 1.., default_values_t = [2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0])]
    vx0: Vec<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value = "basin")]
    run_id: String,
    #[arg(long)]
    quiet: bool,
}

enum Failure {
    Usage(String),
    Config(ConfigError),
    Sim(SimError),
    Output(OutputError),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::UnknownKey(_) => Failure::Usage(e.to_string()),
            e => Failure::Config(e),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        Failure::Sim(e)
    }
}

impl From<OutputError> for Failure {
    fn from(e: OutputError) -> Self {
        Failure::Output(e)
    }
}

fn build_config(args: &ConfigArgs) -> Result<SimConfig, ConfigError> {
    let mut cfg = args.preset.config();
    if let Some(path) = &args.config {
        cfg = load_over(&cfg, path)?;
    }
    for s in &args.set {
        cfg = apply_override(&cfg, s)?;
    }
    if let Some(n) = args.max_steps {
        cfg.simulation.max_steps = n;
    }
    Ok(cfg)
}

fn pool(jobs: Option<usize>) -> rayon::ThreadPool {
    let n = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    rayon::ThreadPoolBuilder::new()
        .num_threads(n.max(1))
        .build()
        .expect("thread pool")
}

fn termination_fields(t: &Termination) -> [String; 3] {
    match *t {
        Termination::Completed { steps } => ["completed".into(), steps.to_string(), "none".into()],
        Termination::Fell { steps, cause, .. } => {
            ["fell".into(), steps.to_string(), cause.name().into()]
        }
    }
}

fn run_single(args: &RunArgs, cfg: &ValidatedConfig, run_id: &str) -> Result<u8, Failure> {
    let result = run_episode(cfg)?;
    let summary = summarize(run_id, args.cfg.preset.name(), &result);
    write_episode(&args.out, run_id, &result, &summary)?;
    if !args.quiet {
        print!("{}", summary.text());
    }
    Ok(if result.termination.fell() {
        EXIT_FELL
    } else {
        0
    })
}

fn run_sweep(args: &RunArgs, base: &SimConfig, grid: &Path, run_id: &str) -> Result<u8, Failure> {
    let text = std::fs::read_to_string(grid).map_err(|source| ConfigError::Read {
        path: grid.to_path_buf(),
        source,
    })?;
    let points = expand(base, &parse_grid(&text)?)?;
    let jobs = args
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let results = run_points(&points, jobs);
    std::fs::create_dir_all(&args.out).map_err(|source| OutputError::Io {
        path: args.out.clone(),
        source,
    })?;
    let mut index = csv::Writer::from_writer(Vec::new());
    index
        .write_record([
            "point",
            "run_id",
            "overrides",
            "termination",
            "steps",
            "fall_cause",
        ])
        .expect("writing to memory");
    let mut failed = false;
    for (p, r) in points.iter().zip(&results) {
        let id = format!("{run_id}_p{:03}", p.index);
        let overrides = p
            .overrides
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ");
        let fields = match r {
            Ok(result) => {
                let summary = summarize(&id, args.cfg.preset.name(), result);
                write_episode(&args.out, &id, result, &summary)?;
                termination_fields(&result.termination)
            }
            Err(e) => {
                failed = true;
                eprintln!("error: point {} ({overrides}): {e}", p.index);
                ["error".into(), String::new(), String::new()]
            }
        };
        if !args.quiet {
            println!(
                "{id} {overrides}: {} {} {}",
                fields[0], fields[1], fields[2]
            );
        }
        let mut row = vec![p.index.to_string(), id, overrides];
        row.extend(fields);
        index.write_record(&row).expect("writing to memory");
    }
    let path = args.out.join(format!("{run_id}_sweep.csv"));
    write_atomic(&path, &index.into_inner().expect("writing to memory"))?;
    Ok(if failed { 1 } else { 0 })
}

fn run_controller_unit(args: &RunArgs, cfg: &ValidatedConfig, run_id: &str) -> Result<u8, Failure> {
    let lines = run_checks(cfg.controller(), cfg.physical());
    let text = report(&lines);
    std::fs::create_dir_all(&args.out).map_err(|source| OutputError::Io {
        path: args.out.clone(),
        source,
    })?;
    write_atomic(
        &args.out.join(format!("{run_id}_controller.txt")),
        text.as_bytes(),
    )?;
    if !args.quiet {
        print!("{text}");
    }
    Ok(if lines.iter().all(|l| l.pass) { 0 } else { 1 })
}

fn run(args: RunArgs) -> Result<u8, Failure> {
    let base = build_config(&args.cfg)?;
    let run_id = args
        .run_id
        .clone()
        .unwrap_or_else(|| args.cfg.preset.name().to_string());
    if args.cfg.preset == Preset::RobotControllerUnit {
        if args.sweep.is_some() {
            return Err(Failure::Usage(
                "--sweep needs a plant; the robot-controller-unit preset has none".into(),
            ));
        }
        return run_controller_unit(&args, &base.validate()?, &run_id);
    }
    match &args.sweep {
        Some(grid) => run_sweep(&args, &base, grid, &run_id),
        None => run_single(&args, &base.validate()?, &run_id),
    }
}

fn basin(args: BasinArgs) -> Result<u8, Failure> {
    let cfg = build_config(&args.cfg)?.validate()?;
    let points = pool(args.jobs).install(|| basin_scan(&cfg, &args.y0, &args.vx0))?;
    std::fs::create_dir_all(&args.out).map_err(|source| OutputError::Io {
        path: args.out.clone(),
        source,
    })?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["y0", "vx0", "termination", "steps", "fall_cause"])
        .expect("writing to memory");
    for p in &points {
        let mut row = vec![p.y0.to_string(), p.vx0.to_string()];
        row.extend(termination_fields(&p.termination));
        w.write_record(&row).expect("writing to memory");
    }
    write_atomic(
        &args.out.join(format!("{}_basin.csv", args.run_id)),
        &w.into_inner().expect("writing to memory"),
    )?;
    if !args.quiet {
        print!("{:>6}", "y0\\vx0");
        for v in &args.vx0 {
            print!(" {v:>6}");
        }
        println!();
        for (row, y) in points.chunks(args.vx0.len()).zip(&args.y0) {
            print!("{y:>6}");
            for p in row {
                match p.termination {
                    Termination::Completed { steps } => print!(" {:>6}", format!("ok{steps}")),
                    Termination::Fell { steps, .. } => print!(" {steps:>6}"),
                }
            }
            println!();
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => run(a),
        Command::Basin(a) => basin(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            let (code, msg) = match f {
                Failure::Usage(m) => (EXIT_USAGE, m),
                Failure::Config(e) => (1, e.to_string()),
                Failure::Sim(e) => (1, e.to_string()),
                Failure::Output(e) => (EXIT_CANT_CREATE, e.to_string()),
            };
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
